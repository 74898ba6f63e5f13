import torch


@torch.compile
def shrink(x):
    while x.norm() > 1.0:
        x = x * 0.5
    for row in x:
        x = x + row
    return x
