print("the computation finished")
