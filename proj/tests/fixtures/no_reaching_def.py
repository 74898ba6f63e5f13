import torch


@torch.compile
def f(x):
    if x.sum() > 0:
        z = x * 2
    return x
