import torch


@torch.compile
def fn(x):
    x = torch.relu(x)
    to_print = ("tensor:", x)
    y = torch.sin(x)
    print(*to_print)
    return y
