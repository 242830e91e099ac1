console.log(answerValue);
