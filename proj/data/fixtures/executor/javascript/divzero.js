const total = 42n;
console.log(total / 0n);
