total = 42
print(total / 0)
