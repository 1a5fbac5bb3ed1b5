"""Decoder-only transformer with rotary position encoding, built from
torch primitives only."""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    layers: int = 6
    heads: int = 16
    width: int = 256
    context: int = 512
    rope_base: float = 10000.0
    mlp_ratio: int = 4

    def __post_init__(self):
        if self.width % self.heads:
            raise ValueError("width must be divisible by heads")
        if (self.width // self.heads) % 2:
            raise ValueError("head dimension must be even for rotation pairs")


def rotary_angles(head_dim: int, base: float) -> torch.Tensor:
    j = torch.arange(head_dim // 2, dtype=torch.float32)
    return base ** (-2.0 * j / head_dim)


def apply_rotary(x: torch.Tensor, positions: torch.Tensor,
                 theta: torch.Tensor) -> torch.Tensor:
    """Rotate feature pairs of x (batch, heads, seq, head_dim) by position."""
    angles = positions[:, None].to(torch.float32) * theta[None, :]
    cos = torch.cos(angles)[None, None]
    sin = torch.sin(angles)[None, None]
    even, odd = x[..., 0::2], x[..., 1::2]
    out = torch.empty_like(x)
    out[..., 0::2] = even * cos - odd * sin
    out[..., 1::2] = even * sin + odd * cos
    return out


class Attention(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.heads = config.heads
        self.head_dim = config.width // config.heads
        self.qkv = nn.Linear(config.width, 3 * config.width, bias=False)
        self.proj = nn.Linear(config.width, config.width, bias=False)
        self.register_buffer(
            "theta", rotary_angles(self.head_dim, config.rope_base),
            persistent=False)

    def forward(self, x: torch.Tensor, positions: torch.Tensor) -> torch.Tensor:
        batch, seq, width = x.shape
        q, k, v = self.qkv(x).chunk(3, dim=-1)

        def split(t):
            return t.view(batch, seq, self.heads, self.head_dim).transpose(1, 2)

        q, k, v = split(q), split(k), split(v)
        q = apply_rotary(q, positions, self.theta)
        k = apply_rotary(k, positions, self.theta)
        out = F.scaled_dot_product_attention(q, k, v, is_causal=True)
        return self.proj(out.transpose(1, 2).reshape(batch, seq, width))


class Block(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.norm1 = nn.LayerNorm(config.width)
        self.attn = Attention(config)
        self.norm2 = nn.LayerNorm(config.width)
        hidden = config.mlp_ratio * config.width
        self.mlp = nn.Sequential(
            nn.Linear(config.width, hidden),
            nn.GELU(),
            nn.Linear(hidden, config.width),
        )

    def forward(self, x, positions):
        x = x + self.attn(self.norm1(x), positions)
        return x + self.mlp(self.norm2(x))


class DecoderModel(nn.Module):
    """Causal language model over the dataset vocabulary plus one pad id."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.embed = nn.Embedding(config.vocab_size + 1, config.width)
        self.blocks = nn.ModuleList(Block(config) for _ in range(config.layers))
        self.norm = nn.LayerNorm(config.width)
        self.head = nn.Linear(config.width, config.vocab_size, bias=False)

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        seq = tokens.shape[1]
        if seq > self.config.context:
            raise ValueError(f"sequence length {seq} exceeds context "
                             f"{self.config.context}")
        positions = torch.arange(seq, device=tokens.device)
        x = self.embed(tokens)
        for block in self.blocks:
            x = block(x, positions)
        return self.head(self.norm(x))

    def masked_loss(self, tokens: torch.Tensor,
                    loss_mask: torch.Tensor) -> torch.Tensor:
        """Next-token cross-entropy restricted to positions whose *label*
        is mask-on (target tokens only)."""
        logits = self.forward(tokens[:, :-1])
        # Pad labels sit outside the output vocabulary; they are masked out
        # below, so remap them to a valid id before the per-token loss.
        labels = tokens[:, 1:].clamp(max=self.config.vocab_size - 1)
        mask = loss_mask[:, 1:]
        flat = F.cross_entropy(logits.reshape(-1, logits.shape[-1]),
                               labels.reshape(-1), reduction="none")
        selected = flat[mask.reshape(-1)]
        if selected.numel() == 0:
            raise ValueError("batch contains no target positions")
        return selected.mean()
