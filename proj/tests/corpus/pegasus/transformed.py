import logging

import torch
import torch.nn as nn
import torch.nn.functional as F

logger = logging.getLogger("pegasus")


class PegasusDecoderLayer(nn.Module):
    def __init__(self, dim):
        super().__init__()
        self.self_attn_norm = nn.LayerNorm(dim)
        self.fc1 = nn.Linear(dim, 2 * dim)
        self.fc2 = nn.Linear(2 * dim, dim)

    def forward(self, h):
        residual = h
        h = self.self_attn_norm(h)
        h = self.fc2(F.gelu(self.fc1(h)))
        return residual + h


class TinyPegasusForCausalLM(nn.Module):
    def __init__(self, vocab=32, dim=8):
        super().__init__()
        self.embed_tokens = nn.Embedding(vocab, dim)
        self.layer = PegasusDecoderLayer(dim)
        self.lm_head = nn.Linear(dim, vocab, bias=False)

    @torch.compile()
    def forward(self, input_ids):
        __gm_defer_0 = ("Passing a tuple of `past_key_values` is deprecated",)
        h = self.embed_tokens(input_ids)
        h = self.layer(h)
        logits = self.lm_head(h)
        __gm_defer_1 = ("decoder produced logits",)
        __gm_ret_0 = F.log_softmax(logits, dim=-1)
        logger.warning(*__gm_defer_0)
        logger.info(*__gm_defer_1)
        return __gm_ret_0


model = TinyPegasusForCausalLM()
