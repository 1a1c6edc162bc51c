"""CLIP-style encoder wrapper: class prompts, augmented views, and the
projected spatial token grid.

Spatial features are the patch tokens of the last visual layer passed
through the model's post-layernorm and visual projection, so they share
the joint-space dimensionality with the text embeddings.
"""

from __future__ import annotations

import numpy as np
import torch
from PIL import Image
from transformers import AutoProcessor, CLIPModel

from .prompts import templates_for_mode

DEFAULT_MODEL = "openai/clip-vit-base-patch16"


class ClipEncoder:
    def __init__(self, model_name_or_path: str = DEFAULT_MODEL, device: str = "cpu"):
        self.device = torch.device(device)
        self.model = CLIPModel.from_pretrained(model_name_or_path).eval().to(self.device)
        self.processor = AutoProcessor.from_pretrained(model_name_or_path)
        self.model_name = str(model_name_or_path)

    @property
    def embed_dim(self) -> int:
        return int(self.model.config.projection_dim)

    @property
    def grid_side(self) -> int:
        vision = self.model.config.vision_config
        return int(vision.image_size) // int(vision.patch_size)

    @property
    def tau(self) -> float:
        """Softmax temperature implied by the checkpoint's learned logit scale."""
        return float(1.0 / self.model.logit_scale.exp().item())

    @torch.no_grad()
    def encode_texts(self, texts: list[str]) -> np.ndarray:
        max_length = int(self.model.config.text_config.max_position_embeddings)
        batch = self.processor(
            text=texts,
            padding="max_length",
            max_length=max_length,
            truncation=True,
            return_tensors="pt",
        ).to(self.device)
        out = self.model.get_text_features(
            input_ids=batch["input_ids"], attention_mask=batch.get("attention_mask")
        )
        features = out.pooler_output if hasattr(out, "pooler_output") else out
        return _normalize(features.cpu().numpy().astype(np.float32))

    def encode_class_set(self, class_names: list[str], prompt_mode: str) -> np.ndarray:
        """One embedding per class: the (re-normalized) template average."""
        if not class_names:
            raise ValueError("class list is empty")
        if len(set(class_names)) != len(class_names):
            raise ValueError("duplicate class names")
        templates = templates_for_mode(prompt_mode)
        rows = []
        for name in class_names:
            per_template = self.encode_texts([t.format(name) for t in templates])
            rows.append(_normalize(per_template.mean(axis=0, keepdims=True))[0])
        return np.stack(rows).astype(np.float32)

    @torch.no_grad()
    def _image_features(self, images: list[Image.Image]) -> np.ndarray:
        pixel_values = self.processor(images=images, return_tensors="pt")["pixel_values"]
        out = self.model.get_image_features(pixel_values=pixel_values.to(self.device))
        features = out.pooler_output if hasattr(out, "pooler_output") else out
        return features.cpu().numpy().astype(np.float32)

    @torch.no_grad()
    def encode_spatial_grid(self, image: Image.Image) -> np.ndarray:
        """(w*h) x d grid: projected patch tokens of the unaugmented image."""
        pixel_values = self.processor(images=[image], return_tensors="pt")["pixel_values"]
        vision_out = self.model.vision_model(pixel_values=pixel_values.to(self.device))
        tokens = vision_out.last_hidden_state[:, 1:, :]  # drop CLS
        tokens = self.model.vision_model.post_layernorm(tokens)
        projected = self.model.visual_projection(tokens)
        return projected[0].cpu().numpy().astype(np.float32)

    def encode_views(
        self,
        image: Image.Image,
        n_views: int,
        seed: int,
        crop_scale: tuple[float, float] = (0.5, 1.0),
    ) -> np.ndarray:
        """N x d view features: row 0 is the full preprocessed image,
        rows 1..N-1 are seeded square random crops.

        Row 0 runs in its own forward pass so its values do not depend on
        the batch size chosen for the crops.
        """
        if n_views < 1:
            raise ValueError(f"need at least one view, got {n_views}")
        image = image.convert("RGB")
        rng = np.random.default_rng(seed)
        rows = [self._image_features([image])]
        if n_views > 1:
            crops = [_random_square_crop(image, rng, crop_scale) for _ in range(n_views - 1)]
            rows.append(self._image_features(crops))
        return np.concatenate(rows, axis=0)


def _normalize(rows: np.ndarray) -> np.ndarray:
    return rows / np.linalg.norm(rows, axis=-1, keepdims=True)


def _random_square_crop(
    image: Image.Image, rng: np.random.Generator, scale: tuple[float, float]
) -> Image.Image:
    lo, hi = scale
    if not 0 < lo <= hi <= 1:
        raise ValueError(f"bad crop scale range {scale}")
    w, h = image.size
    side = max(1, int(round(float(rng.uniform(lo, hi)) * min(w, h))))
    x = int(rng.integers(0, w - side + 1))
    y = int(rng.integers(0, h - side + 1))
    return image.crop((x, y, x + side, y + side))
