import torch
import torch._dynamo


@torch.compile
def f(x):
    x = x + 1
    torch._dynamo.graph_break()
    values = x.tolist()
    return x, values
