def f(a):
    while a > 0:
        if a == 5:
            break
        a = a - 1
        if a == 2:
            continue
        print(a)
    else:
        a = 0
    return a
