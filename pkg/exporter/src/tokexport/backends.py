"""Capture backends: a deterministic synthetic model and a HF hook backend.

Both produce :class:`~tokexport.dump.CapturedSample` objects. The
synthetic backend models the token geometry of a 336px/patch-14 vision
encoder (24 x 24 = 576 tokens per view) without loading any weights, so
the pipeline can be exercised offline. The HF backend captures real
embeddings from a ``transformers`` checkpoint via forward hooks.
"""

from __future__ import annotations

import zlib
from typing import Protocol

import numpy as np

from .dump import CapturedSample

IMAGE_SIZE = 336
PATCH_SIZE = 14
TOKENS_PER_VIEW = (IMAGE_SIZE // PATCH_SIZE) ** 2  # 576
MAX_TILES = 4  # anyres-style tiling: base view + up to 4 crops


def view_count(width: int, height: int) -> int:
    """Number of encoder views for an image: 1, or base + tiles if larger."""
    if max(width, height) <= IMAGE_SIZE:
        return 1
    tiles_w = -(-width // IMAGE_SIZE)
    tiles_h = -(-height // IMAGE_SIZE)
    return 1 + min(MAX_TILES, tiles_w * tiles_h)


def _stable_seed(*parts) -> int:
    text = "\x1f".join(str(p) for p in parts)
    return zlib.crc32(text.encode())


class Backend(Protocol):
    def capture(self, image, prompt: str,
                capture_agent: bool) -> CapturedSample: ...


class SyntheticBackend:
    """Deterministic stand-in for a VLM: real geometry, pseudorandom rows.

    ``image`` is either a path to an image file (its pixel size drives
    the crop geometry) or a spec string ``"synthetic:WxH"``.
    """

    def __init__(self, dim_pre: int = 1024, dim_post: int = 4096,
                 seed: int = 0):
        self.dim_pre = dim_pre
        self.dim_post = dim_post
        self.seed = seed

    def _image_size(self, image) -> tuple[int, int]:
        spec = str(image)
        if spec.startswith("synthetic:"):
            w, _, h = spec.removeprefix("synthetic:").partition("x")
            return int(w), int(h)
        from PIL import Image
        with Image.open(image) as img:
            return img.size

    def _tokenize(self, prompt: str):
        """Whitespace words, 1-2 pseudo-tokens each, with covering spans."""
        words = prompt.split() or ["<empty>"]
        spans = []
        pos = 0
        for w in words:
            count = 1 + _stable_seed("tok", w) % 2
            spans.append((pos, pos + count))
            pos += count
        return pos, spans

    def capture(self, image, prompt: str,
                capture_agent: bool = False) -> CapturedSample:
        width, height = self._image_size(image)
        views = view_count(width, height)
        n = views * TOKENS_PER_VIEW

        rng = np.random.default_rng(
            _stable_seed("sample", self.seed, image, prompt))
        m, spans = self._tokenize(prompt)
        sample = CapturedSample(
            vision_pre=rng.standard_normal((n, self.dim_pre)),
            vision_post=rng.standard_normal((n, self.dim_post)),
            text=rng.standard_normal((m, self.dim_post)),
            word_spans=spans,
            crop_sizes=[TOKENS_PER_VIEW] * views if views > 1 else [],
        )
        if capture_agent:
            o = 4 + _stable_seed("agent", prompt) % 13
            sample.agent = rng.standard_normal((o, self.dim_post))
        return sample


class HFBackend:
    """Captures embeddings from a ``transformers`` LLaVA-style checkpoint.

    vision_pre is the vision tower's last hidden state (before the
    multimodal projector, CLS dropped), vision_post the projector
    output, text the LLM embedder's output for the prompt tokens, and
    agent rows (if enabled) the embedder's output for a lightweight
    agent model's generated answer. Word spans come from the fast
    tokenizer's word alignment when available.
    """

    def __init__(self, model_id: str, agent_model_id: str | None = None,
                 device: str = "cpu"):
        import torch
        from transformers import AutoProcessor, AutoModelForImageTextToText

        self._torch = torch
        self.processor = AutoProcessor.from_pretrained(model_id)
        self.model = AutoModelForImageTextToText.from_pretrained(
            model_id, torch_dtype=torch.float32).to(device).eval()
        self.device = device
        self.agent = None
        if agent_model_id is not None:
            self.agent_processor = AutoProcessor.from_pretrained(agent_model_id)
            self.agent = AutoModelForImageTextToText.from_pretrained(
                agent_model_id, torch_dtype=torch.float32).to(device).eval()

    def _agent_answer(self, image, prompt: str) -> str:
        inputs = self.agent_processor(
            images=image, text=prompt, return_tensors="pt").to(self.device)
        with self._torch.no_grad():
            out = self.agent.generate(**inputs, max_new_tokens=64)
        prompt_len = inputs["input_ids"].shape[1]
        return self.agent_processor.batch_decode(
            out[:, prompt_len:], skip_special_tokens=True)[0]

    def capture(self, image, prompt: str,
                capture_agent: bool = False) -> CapturedSample:
        torch = self._torch
        from PIL import Image
        if not hasattr(image, "size"):
            image = Image.open(image).convert("RGB")

        captured = {}

        def grab(name):
            def hook(_module, _inputs, output):
                if isinstance(output, tuple):
                    output = output[0]
                captured[name] = output.detach()
            return hook

        tower = self.model.vision_tower
        projector = self.model.multi_modal_projector
        handles = [tower.register_forward_hook(grab("pre")),
                   projector.register_forward_hook(grab("post"))]
        try:
            inputs = self.processor(
                images=image, text=prompt, return_tensors="pt").to(self.device)
            with torch.no_grad():
                self.model(**inputs)
        finally:
            for h in handles:
                h.remove()

        pre = captured["pre"]
        if pre.dim() == 3:
            pre = pre.flatten(0, 1) if pre.shape[0] > 1 else pre[0]
        post = captured["post"]
        if post.dim() == 3:
            post = post.flatten(0, 1) if post.shape[0] > 1 else post[0]
        if pre.shape[0] == post.shape[0] + 1:
            pre = pre[1:]  # CLS token not forwarded to the projector

        embedder = self.model.get_input_embeddings()
        tok = self.processor.tokenizer(prompt, return_tensors="pt",
                                       add_special_tokens=False)
        ids = tok["input_ids"].to(self.device)
        with torch.no_grad():
            text = embedder(ids)[0]

        spans = []
        word_ids = tok.word_ids(0) if tok.is_fast else None
        if word_ids and None not in word_ids:
            start = 0
            for i in range(1, len(word_ids) + 1):
                if i == len(word_ids) or word_ids[i] != word_ids[i - 1]:
                    spans.append((start, i))
                    start = i

        views = post.shape[0] // TOKENS_PER_VIEW
        crops = ([TOKENS_PER_VIEW] * views
                 if views > 1 and post.shape[0] % TOKENS_PER_VIEW == 0 else [])

        sample = CapturedSample(
            vision_pre=pre.cpu().numpy(),
            vision_post=post.cpu().numpy(),
            text=text.cpu().numpy(),
            word_spans=spans,
            crop_sizes=crops,
        )
        if capture_agent:
            if self.agent is None:
                raise ValueError("agent capture requested without agent model")
            answer = self._agent_answer(image, prompt)
            aid = self.processor.tokenizer(
                answer or " ", return_tensors="pt",
                add_special_tokens=False)["input_ids"].to(self.device)
            with torch.no_grad():
                sample.agent = embedder(aid)[0].cpu().numpy()
        return sample
