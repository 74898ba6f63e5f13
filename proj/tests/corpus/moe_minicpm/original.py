import torch
import torch.nn as nn


class MiniCPMExpert(nn.Module):
    def __init__(self, dim, hidden):
        super().__init__()
        self.up = nn.Linear(dim, hidden)
        self.down = nn.Linear(hidden, dim)

    def forward(self, h):
        return self.down(torch.relu(self.up(h)))


class MoEMiniCPMx4(nn.Module):
    """Top-1 routed mixture of four experts, dispatched with per-expert gathers."""

    def __init__(self, dim=8, hidden=16):
        super().__init__()
        self.router = nn.Linear(dim, 4)
        self.e0 = MiniCPMExpert(dim, hidden)
        self.e1 = MiniCPMExpert(dim, hidden)
        self.e2 = MiniCPMExpert(dim, hidden)
        self.e3 = MiniCPMExpert(dim, hidden)

    def forward(self, x):
        tokens = x.reshape(-1, x.shape[-1])
        gate = torch.softmax(self.router(tokens), dim=-1)
        weight, top1 = gate.max(dim=-1)
        load = torch.bincount(top1, minlength=4)
        used = top1.unique()
        runs = torch.unique_consecutive(top1)
        out = torch.zeros_like(tokens)

        rows0 = torch.nonzero(top1 == 0).squeeze(-1)
        w0 = torch.masked_select(weight, top1 == 0)
        pos0 = torch.argwhere(top1 == 0).squeeze(-1)
        out = out.index_add(0, rows0, self.e0(tokens[pos0]) * w0[:, None])

        rows1 = torch.nonzero(top1 == 1).squeeze(-1)
        w1 = torch.masked_select(weight, top1 == 1)
        pos1 = torch.argwhere(top1 == 1).squeeze(-1)
        out = out.index_add(0, rows1, self.e1(tokens[pos1]) * w1[:, None])

        rows2 = torch.nonzero(top1 == 2).squeeze(-1)
        w2 = torch.masked_select(weight, top1 == 2)
        pos2 = torch.argwhere(top1 == 2).squeeze(-1)
        out = out.index_add(0, rows2, self.e2(tokens[pos2]) * w2[:, None])

        rows3 = torch.nonzero(top1 == 3).squeeze(-1)
        w3 = torch.masked_select(weight, top1 == 3)
        pos3 = torch.argwhere(top1 == 3).squeeze(-1)
        out = out.index_add(0, rows3, self.e3(tokens[pos3]) * w3[:, None])

        aux = (load.float() / tokens.shape[0]).pow(2).sum() * used.numel() / runs.numel()
        return out.reshape(x.shape), aux


model = torch.compile(MoEMiniCPMx4())
