import torch


def helper(x):
    if x.mean() > 0:
        x = x - x.mean()
    return deep(x)


def deep(x):
    print("deep", x)
    return x


@torch.compile
def entry(x):
    y = helper(x)
    return y
