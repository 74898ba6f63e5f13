import torch
import torch.nn as nn


class QwenAudioEncoder(nn.Module):
    def __init__(self, n_mels=8, dim=12):
        super().__init__()
        self.conv = nn.Conv1d(n_mels, dim, kernel_size=3, padding=1)
        self.proj = nn.Linear(dim, dim)

    def forward(self, mel, audio_len):
        h = torch.relu(self.conv(mel)).transpose(1, 2)
        __gm_pred_0 = audio_len.max() > h.shape[1]
        __gm_then_length_0 = torch.full_like(audio_len, h.shape[1])
        __gm_else_length_0 = audio_len
        length = torch.where(__gm_pred_0, __gm_then_length_0, __gm_else_length_0)
        energy = h.pow(2).mean()
        __gm_pred_1 = energy > 1.0
        __gm_then_h_0 = h / energy.sqrt()
        h = torch.where(__gm_pred_1, __gm_then_h_0, h)
        steps = torch.arange(h.shape[1])[None, :]
        mask = (steps < length[:, None]).to(h.dtype)
        return self.proj(h) * mask[..., None], length


model = torch.compile(QwenAudioEncoder())
