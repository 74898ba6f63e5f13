import logging

import torch
import torch.nn as nn

logger = logging.getLogger("blenderbot")


class BlenderbotEncoderLayer(nn.Module):
    def __init__(self, dim):
        super().__init__()
        self.norm = nn.LayerNorm(dim)
        self.ffn = nn.Sequential(nn.Linear(dim, 4 * dim), nn.ReLU(), nn.Linear(4 * dim, dim))

    def forward(self, h):
        __gm_defer_0 = ("encoder layer input %s", tuple(h.shape))
        __gm_ret_0 = h + self.ffn(self.norm(h))
        logger.debug(*__gm_defer_0)
        return __gm_ret_0


class BlenderbotLike(nn.Module):
    def __init__(self, vocab=48, dim=12):
        super().__init__()
        self.embed = nn.Embedding(vocab, dim)
        self.layer = BlenderbotEncoderLayer(dim)
        self.final_norm = nn.LayerNorm(dim)
        self.head = nn.Linear(dim, vocab)

    def forward(self, input_ids, decoder_input_ids):
        __gm_defer_0 = ("decoder_input_ids are shifted right from labels",)
        enc = self.layer(self.embed(input_ids))
        dec = self.embed(decoder_input_ids) + enc.mean(dim=1, keepdim=True)
        __gm_defer_1 = ("encoder_outputs computed for %d tokens", input_ids.shape[1])
        __gm_ret_0 = self.head(self.final_norm(dec))
        logger.warning(*__gm_defer_0)
        logger.info(*__gm_defer_1)
        return __gm_ret_0


model = torch.compile(BlenderbotLike())
