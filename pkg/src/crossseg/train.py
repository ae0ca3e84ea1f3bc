"""Segmenter training: single-domain baseline and the dual-encoder
adversarial trainer.

The baseline segmenter is embedding -> gated convolution stack -> CRF. The
adversarial model keeps three encoders over one shared embedding table: a
private encoder per domain plus a shared one. A sentence from domain d is
scored by the CRF head of d on the concatenation [private_d ; shared]. A
text-CNN discriminator reads the shared features and steps alternate
between sharpening it (odd steps, discriminator loss, gradients blocked
from the shared encoder) and confusing it (even steps, confusion loss,
discriminator frozen). All randomness flows from the config seed, so two
runs with equal inputs produce identical parameters.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, fields

import numpy as np

from . import crf as crf_mod
from .autodiff import Tensor, backward, concat_cols, log, scale, sub
from .corpus import TAGS, TAG_INDEX, LabeledDataset, tags_to_words
from .errors import DataError
from .model_io import load_container, save_container
from .nn import (Adam, EmbeddingTable, GcnnEncoder, TextCnn, clamped)


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 128
    lr: float = 0.001
    dropout: float = 0.3
    char_emb: int = 200
    gcnn_dim: int = 200
    gcnn_layers: int = 5
    textcnn_filters: int = 200
    filter_sizes: tuple[int, ...] = (3, 4, 5)
    window: int = 3
    seed: int = 42

    def __post_init__(self):
        for name in ("epochs", "batch_size", "char_emb", "gcnn_dim",
                     "gcnn_layers", "textcnn_filters", "window", "seed"):
            if getattr(self, name) <= 0 and name != "seed":
                raise ValueError(f"{name} must be positive")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.window % 2 != 1:
            raise ValueError("window must be odd")
        self.filter_sizes = tuple(int(w) for w in self.filter_sizes)
        if not self.filter_sizes or min(self.filter_sizes) <= 0:
            raise ValueError("filter_sizes must be positive")


def load_config(path: str) -> TrainConfig:
    """Parse key=value lines into a TrainConfig; unknown keys are errors."""
    spec = {f.name: f for f in fields(TrainConfig)}
    values: dict = {}
    with open(path, "rb") as f:
        data = f.read()
    for i, raw in enumerate(data.split(b"\n"), start=1):
        line = raw.decode("utf-8", "replace").strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"{path}: line {i}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in spec:
            raise DataError(f"{path}: line {i}: unknown key {key!r}")
        try:
            if key == "filter_sizes":
                values[key] = tuple(int(v) for v in value.split(","))
            elif key in ("lr", "dropout"):
                values[key] = float(value)
            else:
                values[key] = int(value)
        except ValueError:
            raise DataError(f"{path}: line {i}: bad value for {key!r}") from None
    try:
        return TrainConfig(**values)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def _gold_indices(tags: str) -> np.ndarray:
    return np.array([TAG_INDEX[t] for t in tags], dtype=np.int64)


def _mean(terms: list[Tensor]) -> Tensor:
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    return scale(total, 1.0 / len(terms))


class Segmenter:
    """Single-domain GCNN-CRF segmenter."""

    def __init__(self, embedding: EmbeddingTable, encoder: GcnnEncoder,
                 head: crf_mod.CrfHead, config: TrainConfig):
        self.embedding = embedding
        self.encoder = encoder
        self.head = head
        self.config = config
        self.loss_history: list[float] = []

    @staticmethod
    def create(sentences: list[str], cfg: TrainConfig,
               rng: np.random.Generator) -> "Segmenter":
        emb = EmbeddingTable.build(sentences, cfg.char_emb, rng)
        enc = GcnnEncoder.create(cfg.gcnn_layers, cfg.window, cfg.char_emb,
                                 cfg.gcnn_dim, cfg.dropout, rng)
        head = crf_mod.CrfHead.create(cfg.gcnn_dim, rng)
        return Segmenter(emb, enc, head, cfg)

    def params(self) -> dict[str, Tensor]:
        out = {"embedding": self.embedding.table}
        out.update(self.encoder.params("enc"))
        out.update(self.head.params("crf"))
        return out

    def sentence_loss(self, sentence: str, tags: str, training: bool = False,
                      rng: np.random.Generator | None = None) -> Tensor:
        h = self.encoder.forward(self.embedding.embed(sentence), training, rng)
        emis = crf_mod.emission_scores(h, self.head)
        return crf_mod.nll_loss(emis, self.head, _gold_indices(tags))

    def segment(self, sentence: str) -> list[str]:
        if not sentence:
            return []
        h = self.encoder.forward(self.embedding.embed(sentence))
        emis = crf_mod.emission_scores(h, self.head)
        path = crf_mod.viterbi_decode(emis.data, self.head.trans.data,
                                      self.head.start.data,
                                      self.head.stop.data)
        return tags_to_words(sentence, "".join(TAGS[i] for i in path))

    def save(self, path: str) -> None:
        cfg = self.config
        hyper = {
            "kind": "segmenter",
            "char_emb": str(cfg.char_emb),
            "gcnn_dim": str(cfg.gcnn_dim),
            "gcnn_layers": str(cfg.gcnn_layers),
            "window": str(cfg.window),
            "dropout": repr(cfg.dropout),
            "vocab": _vocab_string(self.embedding),
        }
        save_container(path, hyper,
                       {k: v.data for k, v in self.params().items()})


def _vocab_string(emb: EmbeddingTable) -> str:
    chars = sorted(emb.vocab, key=emb.vocab.get)
    return "".join(chars)


def _embedding_from(hyper: dict[str, str],
                    table: np.ndarray) -> EmbeddingTable:
    vocab = {c: i + 1 for i, c in enumerate(hyper["vocab"])}
    if table.shape[0] != len(vocab) + 1:
        raise DataError("embedding table does not match stored vocabulary")
    return EmbeddingTable(vocab, Tensor(table))


def _encoder_from(tensors: dict[str, np.ndarray], prefix: str, n_layers: int,
                  drop: float) -> GcnnEncoder:
    from .nn import GcnnLayer
    layers = []
    for i in range(n_layers):
        layers.append(GcnnLayer(
            w=Tensor(tensors[f"{prefix}.{i}.w"]),
            b=Tensor(tensors[f"{prefix}.{i}.b"]),
            v=Tensor(tensors[f"{prefix}.{i}.v"]),
            c=Tensor(tensors[f"{prefix}.{i}.c"]),
        ))
    return GcnnEncoder(layers, drop)


def _head_from(tensors: dict[str, np.ndarray], prefix: str) -> crf_mod.CrfHead:
    return crf_mod.CrfHead(
        emit_w=Tensor(tensors[f"{prefix}.emit_w"]),
        emit_b=Tensor(tensors[f"{prefix}.emit_b"]),
        trans=Tensor(tensors[f"{prefix}.trans"]),
        start=Tensor(tensors[f"{prefix}.start"]),
        stop=Tensor(tensors[f"{prefix}.stop"]),
    )


def train_base(ds: LabeledDataset, cfg: TrainConfig,
               log_path: str | None = None) -> Segmenter:
    """Minimize the CRF negative log-likelihood with Adam over shuffled
    mini-batches; deterministic given cfg.seed."""
    if len(ds) == 0:
        raise ValueError("empty training dataset")
    rng = np.random.default_rng(cfg.seed)
    model = Segmenter.create([s for s, _ in ds.items], cfg, rng)
    opt = Adam(model.params(), lr=cfg.lr)
    log_f = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        for epoch in range(1, cfg.epochs + 1):
            order = rng.permutation(len(ds))
            epoch_losses = []
            for j, lo in enumerate(range(0, len(order), cfg.batch_size),
                                   start=1):
                t0 = time.monotonic()
                idx = order[lo:lo + cfg.batch_size]
                terms = [model.sentence_loss(*ds.items[i], training=True,
                                             rng=rng) for i in idx]
                loss = _mean(terms)
                backward(loss)
                opt.step()
                opt.zero_grad()
                epoch_losses.append(loss.item())
                if log_f:
                    ms = (time.monotonic() - t0) * 1000.0
                    log_f.write(f"{epoch}\t{j}\t{loss.item():.6f}\t-\t-"
                                f"\t{ms:.1f}\n")
            model.loss_history.append(float(np.mean(epoch_losses)))
    finally:
        if log_f:
            log_f.close()
    return model


class DaatModel:
    """Dual private encoders plus a shared adversarial encoder."""

    def __init__(self, embedding: EmbeddingTable, enc_src: GcnnEncoder,
                 enc_tgt: GcnnEncoder, enc_shr: GcnnEncoder, disc: TextCnn,
                 crf_src: crf_mod.CrfHead, crf_tgt: crf_mod.CrfHead,
                 config: TrainConfig, mode: str = "daat"):
        if mode not in ("daat", "at"):
            raise ValueError(f"unknown mode {mode!r}")
        self.embedding = embedding
        self.enc_src = enc_src
        self.enc_tgt = enc_tgt
        self.enc_shr = enc_shr
        self.disc = disc
        self.crf_src = crf_src
        self.crf_tgt = crf_tgt
        self.config = config
        self.mode = mode

    @staticmethod
    def create(sentences: list[str], cfg: TrainConfig, mode: str,
               rng: np.random.Generator) -> "DaatModel":
        emb = EmbeddingTable.build(sentences, cfg.char_emb, rng)

        def enc() -> GcnnEncoder:
            return GcnnEncoder.create(cfg.gcnn_layers, cfg.window,
                                      cfg.char_emb, cfg.gcnn_dim,
                                      cfg.dropout, rng)

        enc_src, enc_tgt, enc_shr = enc(), enc(), enc()
        disc = TextCnn.create(cfg.filter_sizes, cfg.gcnn_dim,
                              cfg.textcnn_filters, rng)
        crf_src = crf_mod.CrfHead.create(2 * cfg.gcnn_dim, rng)
        crf_tgt = crf_mod.CrfHead.create(2 * cfg.gcnn_dim, rng)
        return DaatModel(emb, enc_src, enc_tgt, enc_shr, disc, crf_src,
                         crf_tgt, cfg, mode)

    def tagger_params(self) -> dict[str, Tensor]:
        out = {"embedding": self.embedding.table}
        out.update(self.enc_src.params("enc_src"))
        out.update(self.enc_tgt.params("enc_tgt"))
        out.update(self.enc_shr.params("enc_shr"))
        out.update(self.crf_src.params("crf_src"))
        out.update(self.crf_tgt.params("crf_tgt"))
        return out

    def disc_params(self) -> dict[str, Tensor]:
        return self.disc.params("disc")

    def shared_params(self) -> dict[str, Tensor]:
        return self.enc_shr.params("enc_shr")

    def params(self) -> dict[str, Tensor]:
        out = self.tagger_params()
        out.update(self.disc_params())
        return out

    def shared_features(self, sentence: str, training: bool = False,
                        rng: np.random.Generator | None = None) -> Tensor:
        return self.enc_shr.forward(self.embedding.embed(sentence),
                                    training, rng)

    def _tower(self, sentence: str, domain: str, training: bool = False,
               rng: np.random.Generator | None = None,
               shared: Tensor | None = None) -> tuple[Tensor, crf_mod.CrfHead]:
        e = self.embedding.embed(sentence)
        private = (self.enc_src if domain == "source"
                   else self.enc_tgt).forward(e, training, rng)
        if shared is None:
            shared = self.enc_shr.forward(e, training, rng)
        head = self.crf_src if domain == "source" else self.crf_tgt
        return concat_cols([private, shared]), head

    def sentence_loss(self, sentence: str, tags: str, domain: str,
                      training: bool = False,
                      rng: np.random.Generator | None = None,
                      shared: Tensor | None = None) -> Tensor:
        h, head = self._tower(sentence, domain, training, rng, shared)
        emis = crf_mod.emission_scores(h, head)
        return crf_mod.nll_loss(emis, head, _gold_indices(tags))

    def segment(self, sentence: str, domain: str = "target") -> list[str]:
        if not sentence:
            return []
        if domain not in ("source", "target"):
            raise ValueError(f"unknown domain {domain!r}")
        if self.mode == "at":
            domain = "source"  # the target tower is never trained in AT mode
        h, head = self._tower(sentence, domain)
        emis = crf_mod.emission_scores(h, head)
        path = crf_mod.viterbi_decode(emis.data, head.trans.data,
                                      head.start.data, head.stop.data)
        return tags_to_words(sentence, "".join(TAGS[i] for i in path))

    def save(self, path: str) -> None:
        cfg = self.config
        hyper = {
            "kind": "daat",
            "mode": self.mode,
            "char_emb": str(cfg.char_emb),
            "gcnn_dim": str(cfg.gcnn_dim),
            "gcnn_layers": str(cfg.gcnn_layers),
            "window": str(cfg.window),
            "dropout": repr(cfg.dropout),
            "textcnn_filters": str(cfg.textcnn_filters),
            "filter_sizes": ",".join(str(w) for w in cfg.filter_sizes),
            "vocab": _vocab_string(self.embedding),
        }
        save_container(path, hyper,
                       {k: v.data for k, v in self.params().items()})


def load_model(path: str) -> "Segmenter | DaatModel":
    """Load either model kind from a container file."""
    hyper, tensors = load_container(path)
    kind = hyper.get("kind")
    base = dict(
        char_emb=int(hyper["char_emb"]), gcnn_dim=int(hyper["gcnn_dim"]),
        gcnn_layers=int(hyper["gcnn_layers"]), window=int(hyper["window"]),
        dropout=float(hyper["dropout"]))
    if kind == "segmenter":
        cfg = TrainConfig(**base)
        model = Segmenter(
            _embedding_from(hyper, tensors["embedding"]),
            _encoder_from(tensors, "enc", cfg.gcnn_layers, cfg.dropout),
            _head_from(tensors, "crf"), cfg)
        return model
    if kind == "daat":
        cfg = TrainConfig(
            textcnn_filters=int(hyper["textcnn_filters"]),
            filter_sizes=tuple(int(w) for w in
                               hyper["filter_sizes"].split(",")),
            **base)
        disc = TextCnn(cfg.filter_sizes,
                       [(Tensor(tensors[f"disc.conv{w}.w"]),
                         Tensor(tensors[f"disc.conv{w}.b"]))
                        for w in cfg.filter_sizes],
                       Tensor(tensors["disc.proj_w"]),
                       Tensor(tensors["disc.proj_b"]))
        return DaatModel(
            _embedding_from(hyper, tensors["embedding"]),
            _encoder_from(tensors, "enc_src", cfg.gcnn_layers, cfg.dropout),
            _encoder_from(tensors, "enc_tgt", cfg.gcnn_layers, cfg.dropout),
            _encoder_from(tensors, "enc_shr", cfg.gcnn_layers, cfg.dropout),
            disc, _head_from(tensors, "crf_src"),
            _head_from(tensors, "crf_tgt"), cfg, hyper["mode"])
    raise DataError(f"{path}: unknown model kind {kind!r}")


def _adv_terms(model: DaatModel, src_feats: list[Tensor],
               tgt_feats: list[Tensor], flip: bool) -> Tensor:
    """Binary cross-entropy of the discriminator over shared features.

    flip=False scores the true domains (discriminator loss); flip=True
    swaps them (confusion loss). Probabilities are clamped to 1e-7.
    """
    terms_src = []
    for f in src_feats:
        p = clamped(model.disc.forward(f))
        terms_src.append(log(p) if not flip else log(sub(1.0, p)))
    terms_tgt = []
    for f in tgt_feats:
        p = clamped(model.disc.forward(f))
        terms_tgt.append(log(sub(1.0, p)) if not flip else log(p))
    return sub(0.0, _mean(terms_src) + _mean(terms_tgt))


def discriminator_loss(model: DaatModel, batch_src: list[str],
                       batch_tgt: list[str], training: bool = False,
                       rng: np.random.Generator | None = None,
                       detach_shared: bool = False) -> Tensor:
    """Loss the discriminator minimizes to tell the domains apart.

    With detach_shared the shared encoder is excluded from the gradient
    path, as on odd training steps.
    """
    sf = [model.shared_features(s, training, rng) for s in batch_src]
    tf = [model.shared_features(s, training, rng) for s in batch_tgt]
    if detach_shared:
        sf = [f.detach() for f in sf]
        tf = [f.detach() for f in tf]
    return _adv_terms(model, sf, tf, flip=False)


def confusion_loss(model: DaatModel, batch_src: list[str],
                   batch_tgt: list[str], training: bool = False,
                   rng: np.random.Generator | None = None) -> Tensor:
    """Domain-flipped loss the shared encoder minimizes to fool the
    discriminator."""
    sf = [model.shared_features(s, training, rng) for s in batch_src]
    tf = [model.shared_features(s, training, rng) for s in batch_tgt]
    return _adv_terms(model, sf, tf, flip=True)


def tagging_losses(model: DaatModel, batch_src: list[tuple[str, str]],
                   batch_tgt: list[tuple[str, str]], training: bool = False,
                   rng: np.random.Generator | None = None,
                   ) -> tuple[Tensor, Tensor | None]:
    """Mean CRF negative log-likelihood per domain tower. The target loss
    is None in AT mode or for an empty target batch."""
    l_src = _mean([model.sentence_loss(s, t, "source", training, rng)
                   for s, t in batch_src])
    if model.mode == "at" or not batch_tgt:
        return l_src, None
    l_tgt = _mean([model.sentence_loss(s, t, "target", training, rng)
                   for s, t in batch_tgt])
    return l_src, l_tgt


class _Cursor:
    """Endless shuffled index stream over one dataset."""

    def __init__(self, n: int, rng: np.random.Generator):
        self.n = n
        self.rng = rng
        self.order = rng.permutation(n)
        self.pos = 0

    def take(self, k: int) -> list[int]:
        out: list[int] = []
        while len(out) < k:
            if self.pos == self.n:
                self.order = self.rng.permutation(self.n)
                self.pos = 0
            out.append(int(self.order[self.pos]))
            self.pos += 1
        return out


def adversarial_train(ds_src: LabeledDataset,
                      target: "LabeledDataset | list[str]",
                      cfg: TrainConfig, mode: str = "daat",
                      log_path: str | None = None,
                      checkpoint_dir: str | None = None,
                      hook=None) -> DaatModel:
    """Alternating adversarial training.

    Steps are numbered from 1 inside each epoch. Odd steps optimize
    L_src + L_tgt + L_d: the tagging losses update the three encoders and
    CRF heads, L_d updates only the discriminator because the shared
    features are detached on its path. Even steps optimize
    L_src + L_tgt + L_c with the discriminator frozen, so the confusion
    gradient lands in the shared encoder. AT mode drops L_tgt, reading the
    target batch as raw sentences. An epoch is ceil(max(|src|, |target|) /
    batch) steps, each domain advancing an independent shuffled cursor.
    """
    if mode == "daat":
        if not isinstance(target, LabeledDataset):
            raise ValueError("daat mode needs a tagged target dataset")
        tgt_items: list = list(target.items)
        tgt_sentences = [s for s, _ in tgt_items]
    else:
        if isinstance(target, LabeledDataset):
            tgt_items = list(target.items)
            tgt_sentences = [s for s, _ in tgt_items]
        else:
            tgt_items = [(s, "") for s in target]
            tgt_sentences = list(target)
    if len(ds_src) == 0 or not tgt_items:
        raise ValueError("both domains need at least one sentence")
    rng = np.random.default_rng(cfg.seed)
    model = DaatModel.create([s for s, _ in ds_src.items] + tgt_sentences,
                             cfg, mode, rng)
    opt_tag = Adam(model.tagger_params(), lr=cfg.lr)
    opt_disc = Adam(model.disc_params(), lr=cfg.lr)
    steps = math.ceil(max(len(ds_src), len(tgt_items)) / cfg.batch_size)
    cur_src = _Cursor(len(ds_src), rng)
    cur_tgt = _Cursor(len(tgt_items), rng)
    log_f = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        for epoch in range(1, cfg.epochs + 1):
            for j in range(1, steps + 1):
                t0 = time.monotonic()
                batch_src = [ds_src.items[i]
                             for i in cur_src.take(cfg.batch_size)]
                batch_tgt = [tgt_items[i]
                             for i in cur_tgt.take(cfg.batch_size)]
                src_s = [s for s, _ in batch_src]
                tgt_s = [s for s, _ in batch_tgt]
                l_src, l_tgt = tagging_losses(model, batch_src, batch_tgt,
                                              training=True, rng=rng)
                odd = j % 2 == 1
                if odd:
                    l_adv = discriminator_loss(model, src_s, tgt_s,
                                               training=True, rng=rng,
                                               detach_shared=True)
                else:
                    l_adv = confusion_loss(model, src_s, tgt_s,
                                           training=True, rng=rng)
                total = l_src + l_adv if l_tgt is None \
                    else l_src + l_tgt + l_adv
                backward(total)
                opt_tag.step()
                if odd:
                    opt_disc.step()
                opt_tag.zero_grad()
                opt_disc.zero_grad()
                if hook or log_f:
                    rec = {
                        "epoch": epoch, "step": j,
                        "branch": "d" if odd else "c",
                        "l_src": l_src.item(),
                        "l_tgt": l_tgt.item() if l_tgt is not None else None,
                        "l_adv": l_adv.item(),
                    }
                    if hook:
                        hook(rec)
                    if log_f:
                        ms = (time.monotonic() - t0) * 1000.0
                        lt = "-" if rec["l_tgt"] is None \
                            else f"{rec['l_tgt']:.6f}"
                        log_f.write(f"{epoch}\t{j}\t{rec['l_src']:.6f}\t{lt}"
                                    f"\t{rec['l_adv']:.6f}\t{ms:.1f}\n")
            if checkpoint_dir:
                model.save(f"{checkpoint_dir}/epoch_{epoch:03d}.daat")
    finally:
        if log_f:
            log_f.close()
    return model


def segment(sentence: str, model: "Segmenter | DaatModel",
            domain: str = "target") -> list[str]:
    """Segment with either model kind; domain picks the tower."""
    if isinstance(model, DaatModel):
        return model.segment(sentence, domain)
    return model.segment(sentence)
