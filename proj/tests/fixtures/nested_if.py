import torch


@torch.compile
def f(x, y):
    z = y
    if x.sum() > 0:
        z = x + y
        if y.mean() > 1:
            z = z * 2
    return z
