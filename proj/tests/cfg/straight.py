def f(a):
    b = a + 1
    print(b)
    return b
