"""Offline test fixtures: a tiny randomly-initialized CLIP checkpoint
(32px images, 16px patches, 16-dim joint space) and a synthetic
two-class image tree. No network access is needed anywhere."""

import json
import shutil
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image


def bytes_to_unicode():
    bs = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(ord("\xa1"), ord("\xac") + 1))
        + list(range(ord("\xae"), ord("\xff") + 1))
    )
    cs = bs[:]
    n = 0
    for b in range(2**8):
        if b not in bs:
            bs.append(b)
            cs.append(2**8 + n)
            n += 1
    return dict(zip(bs, [chr(c) for c in cs]))


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory):
    import torch
    from transformers import (
        CLIPConfig,
        CLIPImageProcessor,
        CLIPModel,
        CLIPProcessor,
        CLIPTextConfig,
        CLIPTokenizer,
        CLIPVisionConfig,
    )

    root = tmp_path_factory.mktemp("tinyclip")

    # character-fallback BPE vocabulary: every byte symbol, with and without
    # the end-of-word marker, plus the two specials
    alphabet = list(bytes_to_unicode().values())
    vocab = {}
    for ch in alphabet:
        vocab[ch] = len(vocab)
    for ch in alphabet:
        vocab[ch + "</w>"] = len(vocab)
    vocab["<|startoftext|>"] = len(vocab)
    vocab["<|endoftext|>"] = len(vocab)
    (root / "vocab.json").write_text(json.dumps(vocab))
    (root / "merges.txt").write_text("#version: 0.2\n")
    tokenizer = CLIPTokenizer(str(root / "vocab.json"), str(root / "merges.txt"))

    text_cfg = CLIPTextConfig(
        hidden_size=32,
        intermediate_size=64,
        num_hidden_layers=2,
        num_attention_heads=2,
        vocab_size=len(vocab),
        bos_token_id=vocab["<|startoftext|>"],
        eos_token_id=vocab["<|endoftext|>"],
    )
    vision_cfg = CLIPVisionConfig(
        hidden_size=32,
        intermediate_size=64,
        num_hidden_layers=2,
        num_attention_heads=2,
        image_size=32,
        patch_size=16,
    )
    config = CLIPConfig(
        text_config=text_cfg.to_dict(), vision_config=vision_cfg.to_dict(), projection_dim=16
    )
    torch.manual_seed(7)
    model = CLIPModel(config).eval()
    processor = CLIPProcessor(
        image_processor=CLIPImageProcessor(
            size={"shortest_edge": 32}, crop_size={"height": 32, "width": 32}
        ),
        tokenizer=tokenizer,
    )
    out = root / "checkpoint"
    model.save_pretrained(out)
    processor.save_pretrained(out)
    return out


@pytest.fixture(scope="session")
def image_tree(tmp_path_factory):
    """Two class directories of noisy color-biased images plus one loose image."""
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(3)
    for class_name, tint in (("redthing", (200, 40, 40)), ("bluething", (40, 40, 200))):
        class_dir = root / class_name
        class_dir.mkdir()
        for i in range(3):
            noise = rng.uniform(0, 120, size=(48, 64, 3))
            img = np.clip(noise + np.array(tint), 0, 255).astype(np.uint8)
            Image.fromarray(img).save(class_dir / f"img_{i}.png")
    loose = rng.uniform(0, 255, size=(40, 40, 3)).astype(np.uint8)
    Image.fromarray(loose).save(root / "mystery.png")
    (root / "classes.txt").write_text("redthing\nbluething\n")
    return root


def logitbias_cmd() -> list[str]:
    """The consumer CLI, used to validate emitted files through its public surface."""
    exe = shutil.which("logitbias")
    if exe:
        return [exe]
    return [sys.executable, "-m", "logitbias.cli"]


def run_logitbias(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        logitbias_cmd() + list(args), capture_output=True, text=True, timeout=300
    )
