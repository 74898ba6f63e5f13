import torch
import torch.nn as nn


class Scorer(nn.Module):
    def __init__(self):
        super().__init__()
        self.proj = nn.Linear(4, 4)
        self.history = []

    def log_metrics(self, z):
        self.history.append(z.detach())

    @torch.compile()
    def forward(self, x):
        z = self.proj(x)
        if z.sum() > 0:
            self.log_metrics(z)
            z = z * 2
        return z
