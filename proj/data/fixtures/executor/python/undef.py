print(answer_value)
