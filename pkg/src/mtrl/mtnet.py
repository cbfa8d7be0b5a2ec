"""Shared-representation network: per-task input blocks, one shared trunk,
per-task heads.

For task ``t`` the output is ``head[t](shared(input_block[t](x)))``. Critic
networks also receive an action vector, which is concatenated to the trunk
input (after the input block).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .nn import (AdamState, DenseNet, LossSpec, ShapeError, adam_step,
                 loss_eval, net_arrays, net_from_arrays)

PRESETS = ("mfqi", "mdqn_q", "mddpg_actor", "mddpg_critic")

# Appendix-B widths; desk-scale runs may override them.
PRESET_WIDTHS = {
    "mfqi": {"input": [], "shared": [30, 30]},
    "mdqn_q": {"input": [80], "shared": [80, 80]},
    "mddpg_actor": {"input": [600], "shared": [500]},
    "mddpg_critic": {"input": [600], "shared": [500]},
}


@dataclass
class RegressionBatch:
    """Inputs and regression targets for one task.

    ``action`` picks the output column each target belongs to (Q-networks);
    leave it ``None`` for single-output nets.
    """
    x: np.ndarray
    y: np.ndarray
    action: np.ndarray | None = None
    extra: np.ndarray | None = None

    def __len__(self):
        return len(self.x)


@dataclass
class GradientBatch:
    """Inputs plus a ready-made upstream gradient dL/dy for one task."""
    x: np.ndarray
    dl_dy: np.ndarray
    extra: np.ndarray | None = None

    def __len__(self):
        return len(self.x)


class MultiTaskNetwork:
    def __init__(self, input_blocks, shared, heads, extra_dim=0, preset=None):
        if len(input_blocks) != len(heads) or not input_blocks:
            raise ShapeError("need one input block and one head per task (T >= 1)")
        J = input_blocks[0].n_out
        for blk in input_blocks:
            if blk.n_out != J:
                raise ShapeError("all input blocks must share their output width")
        if shared.n_in != J + extra_dim:
            raise ShapeError(f"trunk expects {shared.n_in} inputs, blocks give {J}+{extra_dim}")
        for head in heads:
            if head.n_in != shared.n_out:
                raise ShapeError("head input width must equal trunk output width")
        self.input_blocks = list(input_blocks)
        self.shared = shared
        self.heads = list(heads)
        self.extra_dim = extra_dim
        self.preset = preset
        self.shared_frozen = False
        self.reset_optimizer()

    @property
    def n_tasks(self) -> int:
        return len(self.heads)

    def reset_optimizer(self, section: str | None = None) -> None:
        if section in (None, "input"):
            self.opt_input = [AdamState.like(b.params()) for b in self.input_blocks]
        if section in (None, "shared"):
            self.opt_shared = AdamState.like(self.shared.params())
        if section in (None, "heads"):
            self.opt_heads = [AdamState.like(h.params()) for h in self.heads]

    def sections(self):
        """(tag, DenseNet) pairs in a fixed order."""
        out = [(f"input_block[{t}]", b) for t, b in enumerate(self.input_blocks)]
        out.append(("shared", self.shared))
        out.extend((f"head[{t}]", h) for t, h in enumerate(self.heads))
        return out

    def params(self) -> list[np.ndarray]:
        return [p for _, net in self.sections() for p in net.params()]

    def spec(self) -> dict:
        return {"preset": self.preset, "extra_dim": self.extra_dim,
                "sections": {tag: net.spec() for tag, net in self.sections()}}

    def copy(self) -> "MultiTaskNetwork":
        other = MultiTaskNetwork([b.copy() for b in self.input_blocks],
                                 self.shared.copy(), [h.copy() for h in self.heads],
                                 self.extra_dim, self.preset)
        other.shared_frozen = self.shared_frozen
        return other

    def _check_task(self, task):
        if not (isinstance(task, (int, np.integer)) and 0 <= task < self.n_tasks):
            raise KeyError(f"unknown task id {task!r} (T={self.n_tasks})")

    def _trunk_input(self, feats, extra):
        if self.extra_dim == 0:
            if extra is not None:
                raise ShapeError("this network takes no extra input")
            return feats
        if extra is None:
            raise ShapeError("critic networks need the action as extra input")
        extra = np.asarray(extra, dtype=np.float64)
        if extra.ndim == 1 and feats.ndim == 2:
            extra = extra[:, None]
        if extra.shape[-1] > self.extra_dim:
            raise ShapeError(f"extra input wider than {self.extra_dim}")
        if extra.shape[-1] < self.extra_dim:  # narrower action spaces are zero-padded
            pad = [(0, 0)] * (extra.ndim - 1) + [(0, self.extra_dim - extra.shape[-1])]
            extra = np.pad(extra, pad)
        return np.concatenate([feats, extra], axis=-1)

    def forward(self, task, x, extra=None, cache=False):
        self._check_task(task)
        blk = self.input_blocks[task]
        feats, c_in = blk.forward(x, cache=True)
        z, c_sh = self.shared.forward(self._trunk_input(feats, extra), cache=True)
        y, c_hd = self.heads[task].forward(z, cache=True)
        if cache:
            return y, (task, c_in, c_sh, c_hd, feats.shape[-1])
        return y

    def features(self, task, x, extra=None):
        """Trunk output h(w_t(x))."""
        self._check_task(task)
        feats = self.input_blocks[task].forward(x)
        return self.shared.forward(self._trunk_input(feats, extra))

    def backward(self, cache, dL_dy):
        """Gradients for one task's forward pass.

        Returns ``(g_input, g_shared, g_head, dL_dx, dL_dextra)``.
        """
        task, c_in, c_sh, c_hd, J = cache
        g_head, dz = self.heads[task].backward(c_hd, dL_dy)
        g_shared, dtrunk = self.shared.backward(c_sh, dz)
        dfeats = dtrunk[..., :J]
        dextra = dtrunk[..., J:] if self.extra_dim else None
        g_input, dx = self.input_blocks[task].backward(c_in, dfeats)
        return g_input, g_shared, g_head, dx, dextra

    def input_gradient(self, task, x, extra, dL_dy):
        """dL/dx and dL/d(extra) for upstream gradient ``dL_dy``."""
        _, cache = self.forward(task, x, extra, cache=True)
        *_, dx, dextra = self.backward(cache, dL_dy)
        return dx, dextra

    def gradients(self, batch, loss: LossSpec | None = None):
        """Accumulate gradients of the batch objective.

        ``batch`` maps task id -> RegressionBatch/GradientBatch (a list is
        read as tasks 0..T-1). Regression losses are averaged over all
        ``n*T`` samples. Returns ``(grads, mean_loss)`` where ``grads`` is a
        dict with keys ``input`` / ``head`` (task -> list) and ``shared``.
        """
        items = _as_items(batch)
        if not items:
            raise ValueError("empty batch")
        sizes = {len(b) for _, b in items}
        if len(sizes) != 1:
            raise ValueError(f"every task must contribute the same number of samples, got {sorted(sizes)}")
        total = sum(len(b) for _, b in items)
        g_shared = [np.zeros_like(p) for p in self.shared.params()]
        g_input, g_head = {}, {}
        loss_sum, n_reg = 0.0, 0
        for task, b in items:
            y_hat, cache = self.forward(task, b.x, b.extra, cache=True)
            if isinstance(b, RegressionBatch):
                if loss is None:
                    raise ValueError("regression batches need a LossSpec")
                if b.action is not None:
                    idx = np.arange(len(b.x))
                    act = np.asarray(b.action, dtype=np.intp)
                    pred = y_hat[idx, act]
                else:
                    pred = y_hat.reshape(len(b.x), -1)[:, 0]
                value, dpred = loss_eval(loss, pred, np.asarray(b.y, dtype=np.float64).reshape(-1))
                value, dpred = np.atleast_1d(value), np.atleast_1d(dpred)
                dy = np.zeros_like(y_hat)
                if b.action is not None:
                    dy[idx, act] = dpred / total
                else:
                    dy[:, 0] = dpred / total
                loss_sum += float(value.sum())
                n_reg += len(b.x)
            else:
                dy = np.asarray(b.dl_dy, dtype=np.float64).reshape(y_hat.shape)
            gi, gs, gh, _, _ = self.backward(cache, dy)
            _accumulate(g_input, task, gi)
            _accumulate(g_head, task, gh)
            for acc, g in zip(g_shared, gs):
                acc += g
        mean_loss = loss_sum / n_reg if n_reg else float("nan")
        return {"input": g_input, "shared": g_shared, "head": g_head}, mean_loss

    def apply_gradients(self, grads, lr: float, l2: float = 0.0) -> None:
        """One Adam step on every section that received gradients.

        Blocks of tasks absent from the batch are left alone, as is the
        trunk when frozen. ``l2`` adds ``l2 * W`` to weight gradients.
        """
        for task, g in grads["input"].items():
            blk = self.input_blocks[task]
            if blk.layers:
                adam_step(blk.params(), _decay(blk, g, l2), self.opt_input[task], lr,
                          names=[f"input_block[{task}].{n}" for n in blk.param_names()])
        if not self.shared_frozen:
            adam_step(self.shared.params(), _decay(self.shared, grads["shared"], l2),
                      self.opt_shared, lr,
                      names=[f"shared.{n}" for n in self.shared.param_names()])
        for task, g in grads["head"].items():
            head = self.heads[task]
            adam_step(head.params(), _decay(head, g, l2), self.opt_heads[task], lr,
                      names=[f"head[{task}].{n}" for n in head.param_names()])

    def update(self, batch, loss: LossSpec | None, lr: float, l2: float = 0.0) -> float:
        grads, mean_loss = self.gradients(batch, loss)
        self.apply_gradients(grads, lr, l2)
        return mean_loss


def _as_items(batch):
    if isinstance(batch, dict):
        return sorted(batch.items())
    return list(enumerate(batch))


def _accumulate(store, task, grads):
    if task in store:
        for acc, g in zip(store[task], grads):
            acc += g
    else:
        store[task] = [g.copy() for g in grads]


def _decay(net: DenseNet, grads, l2):
    if not l2:
        return grads
    out = list(grads)
    for i, layer in enumerate(net.layers):
        out[2 * i] = grads[2 * i] + l2 * layer.W
    return out


def mt_forward(net: MultiTaskNetwork, task, x, extra=None):
    return net.forward(task, x, extra)


def mt_update(net: MultiTaskNetwork, batch, loss: LossSpec, lr: float, l2: float = 0.0) -> float:
    return net.update(batch, loss, lr, l2)


# -- presets -----------------------------------------------------------------

def build_preset(name, input_dims, output_dims, rng, widths=None, extra_dim=None):
    """Build one of the named architectures for tasks with the given
    input and output widths.

    ``widths`` may override ``{"input": [...], "shared": [...]}``.
    """
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}")
    if len(input_dims) != len(output_dims):
        raise ValueError("need one output width per task")
    w = dict(PRESET_WIDTHS[name])
    if widths:
        w.update(widths)
    in_w, sh_w = list(w["input"]), list(w["shared"])

    if name == "mfqi":
        if in_w:
            blocks = [DenseNet.build([d] + in_w, "sigmoid", rng) for d in input_dims]
        else:
            if len(set(input_dims)) != 1:
                raise ShapeError("identity input blocks need equal state widths")
            blocks = [DenseNet([], width=input_dims[0]) for _ in input_dims]
        J = blocks[0].n_out
        shared = DenseNet.build([J] + sh_w, "sigmoid", rng)
        heads = [DenseNet.build([sh_w[-1], k], "linear", rng) for k in output_dims]
        return MultiTaskNetwork(blocks, shared, heads, preset=name)

    blocks = [DenseNet.build([d] + in_w, "relu", rng) for d in input_dims]
    J = in_w[-1]
    if name == "mdqn_q":
        acts = ["relu"] * (len(sh_w) - 1) + ["sigmoid"]
        shared = DenseNet.build([J] + sh_w, acts, rng)
        heads = [DenseNet.build([sh_w[-1], k], "linear", rng) for k in output_dims]
        return MultiTaskNetwork(blocks, shared, heads, preset=name)
    if name == "mddpg_actor":
        shared = DenseNet.build([J] + sh_w, "relu", rng)
        heads = [DenseNet.build([sh_w[-1], k], "tanh", rng) for k in output_dims]
        return MultiTaskNetwork(blocks, shared, heads, preset=name)
    # critic: output_dims are the action widths, each head has one unit
    a_dim = extra_dim if extra_dim is not None else max(output_dims)
    shared = DenseNet.build([J + a_dim] + sh_w, "sigmoid", rng)
    heads = [DenseNet.build([sh_w[-1], 1], "linear", rng) for _ in output_dims]
    return MultiTaskNetwork(blocks, shared, heads, extra_dim=a_dim, preset=name)


# -- target networks and transfer --------------------------------------------

def sync_target(src: MultiTaskNetwork, dst: MultiTaskNetwork, mode: str = "hard",
                tau: float | None = None) -> None:
    """Copy (hard) or Polyak-average (soft, rate ``tau``) src into dst."""
    if src.spec() != dst.spec():
        raise ShapeError("source and target architectures differ")
    if mode == "hard":
        for d, s in zip(dst.params(), src.params()):
            d[...] = s
    elif mode == "soft":
        if tau is None or not 0.0 <= tau <= 1.0:
            raise ValueError("soft sync needs tau in [0, 1]")
        for d, s in zip(dst.params(), src.params()):
            d *= 1.0 - tau
            d += tau * s
    else:
        raise ValueError(f"unknown sync mode {mode!r}")


def transplant_shared(src, dst: MultiTaskNetwork) -> None:
    """Overwrite dst's trunk with src's (a network or a bare trunk DenseNet).

    Input blocks and heads of dst are left as they are and the trunk's
    optimizer state is reset.
    """
    trunk = src.shared if isinstance(src, MultiTaskNetwork) else src
    if trunk.spec() != dst.shared.spec():
        raise ShapeError("trunk architectures differ")
    for d, s in zip(dst.shared.params(), trunk.params()):
        d[...] = s
    dst.reset_optimizer("shared")


# -- snapshots ---------------------------------------------------------------

def save_mtnet(net: MultiTaskNetwork, path) -> None:
    arrays, sections = {}, {}
    for tag, sub in net.sections():
        meta, arr = net_arrays(sub, prefix=tag + "/")
        sections[tag] = meta
        arrays.update(arr)
    header = {"format": "mtnet", "version": 1, "preset": net.preset,
              "n_tasks": net.n_tasks, "extra_dim": net.extra_dim, "sections": sections}
    with open(Path(path), "wb") as fh:
        np.savez(fh, __meta__=np.array(json.dumps(header)), **arrays)


def _read_snapshot(path):
    data = np.load(Path(path), allow_pickle=False)
    header = json.loads(str(data["__meta__"]))
    if header.get("format") != "mtnet":
        data.close()
        raise ValueError(f"{path} is not a multi-task network snapshot")
    return header, data


def load_mtnet(path) -> MultiTaskNetwork:
    header, data = _read_snapshot(path)
    with data:
        secs = header["sections"]
        T = header["n_tasks"]
        blocks = [net_from_arrays(secs[f"input_block[{t}]"], data, f"input_block[{t}]/") for t in range(T)]
        shared = net_from_arrays(secs["shared"], data, "shared/")
        heads = [net_from_arrays(secs[f"head[{t}]"], data, f"head[{t}]/") for t in range(T)]
    return MultiTaskNetwork(blocks, shared, heads, header["extra_dim"], header["preset"])


def load_shared(path) -> DenseNet:
    """Read only the trunk of a snapshot, whatever its task count."""
    header, data = _read_snapshot(path)
    with data:
        return net_from_arrays(header["sections"]["shared"], data, "shared/")
