#!/usr/bin/env python3
"""Trains the 3-64-64-3 tanh surrogate c -> lambda on a QE dataset and exports
the weight file read by the C++ inference (Adam, then L-BFGS, in float64)."""

import argparse
import csv
import hashlib
import json
import os

import numpy as np
import torch


def read_dataset(path):
    with open(path) as f:
        rows = list(csv.reader(f))
    if rows[0] != ["c1", "c2", "c3", "l1", "l2", "l3"]:
        raise SystemExit(f"{path}: unexpected header {rows[0]}")
    data = np.array(rows[1:], dtype=np.float64)
    c, lam = data[:, :3], data[:, 3:]
    if not (np.all(c[:, 0] >= c[:, 1]) and np.all(c[:, 1] >= c[:, 2]) and np.all(c[:, 2] > 0)):
        raise SystemExit(f"{path}: inputs must be sorted admissible triples")
    with open(path + ".json") as f:
        meta = json.load(f)
    with open(path, "rb") as f:
        digest = hashlib.sha256(f.read()).hexdigest()[:16]
    return c, lam, meta, digest


def infer(net, x):
    """Reference forward pass in numpy, mirroring the C++ evaluation order."""
    a = (x - net["input_mean"]) / net["input_std"]
    for k, (W, b) in enumerate(zip(net["weights"], net["biases"])):
        a = a @ W.T + b
        if k + 1 < len(net["weights"]):
            a = np.tanh(a)
    return a * net["output_std"] + net["output_mean"]


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--adam-epochs", type=int, default=1000)
    p.add_argument("--batch", type=int, default=512)
    p.add_argument("--lbfgs-tol", type=float, default=1e-8)
    p.add_argument("--lbfgs-max-iter", type=int, default=20000)
    p.add_argument("--val-fraction", type=float, default=0.1)
    args = p.parse_args()

    torch.manual_seed(args.seed)
    rng = np.random.default_rng(args.seed)
    torch.set_default_dtype(torch.float64)

    c, lam, meta, digest = read_dataset(args.dataset)
    perm = rng.permutation(len(c))
    n_val = int(round(args.val_fraction * len(c)))
    val, train = perm[:n_val], perm[n_val:]
    in_mean, in_std = c[train].mean(0), c[train].std(0)
    out_mean, out_std = lam[train].mean(0), lam[train].std(0)
    X = torch.tensor((c - in_mean) / in_std)
    Y = torch.tensor((lam - out_mean) / out_std)
    Xt, Yt, Xv, Yv = X[train], Y[train], X[val], Y[val]

    model = torch.nn.Sequential(
        torch.nn.Linear(3, 64), torch.nn.Tanh(), torch.nn.Linear(64, 64), torch.nn.Tanh(), torch.nn.Linear(64, 3)
    )
    mse = torch.nn.MSELoss()
    history = []

    opt = torch.optim.Adam(model.parameters(), lr=1e-3)
    for epoch in range(args.adam_epochs):
        order = torch.randperm(len(Xt))
        for i in range(0, len(Xt), args.batch):
            idx = order[i : i + args.batch]
            opt.zero_grad()
            loss = mse(model(Xt[idx]), Yt[idx])
            loss.backward()
            opt.step()
        with torch.no_grad():
            history.append(("adam", epoch, mse(model(Xt), Yt).item(), mse(model(Xv), Yv).item()))
    adam_loss = history[-1][2]
    print(f"adam: train {adam_loss:.3e} val {history[-1][3]:.3e}")

    lbfgs = torch.optim.LBFGS(
        model.parameters(),
        lr=1.0,
        max_iter=args.lbfgs_max_iter,
        tolerance_change=args.lbfgs_tol * 1e-4,
        tolerance_grad=1e-12,
        history_size=50,
        line_search_fn="strong_wolfe",
    )

    def closure():
        lbfgs.zero_grad()
        loss = mse(model(Xt), Yt)
        loss.backward()
        return loss

    # outer passes stop once the loss changes by less than the tolerance
    prev = adam_loss
    for it in range(100):
        lbfgs.step(closure)
        with torch.no_grad():
            cur, v = mse(model(Xt), Yt).item(), mse(model(Xv), Yv).item()
        history.append(("lbfgs", it, cur, v))
        print(f"lbfgs pass {it}: train {cur:.3e} val {v:.3e}")
        if abs(prev - cur) < args.lbfgs_tol * max(prev, 1e-300) or abs(prev - cur) < 1e-14:
            break
        prev = cur

    layers = [m for m in model if isinstance(m, torch.nn.Linear)]
    net = {
        "weights": [l.weight.detach().numpy().copy() for l in layers],
        "biases": [l.bias.detach().numpy().copy() for l in layers],
        "input_mean": in_mean,
        "input_std": in_std,
        "output_mean": out_mean,
        "output_std": out_std,
    }
    pred_val = infer(net, c[val])
    val_mse_orig = float(np.mean((pred_val - lam[val]) ** 2))
    val_mse_norm = float(np.mean(((pred_val - lam[val]) / out_std) ** 2))

    probe_idx = rng.choice(val, size=100, replace=False)
    probes = [{"input": c[i].tolist(), "output": infer(net, c[i : i + 1])[0].tolist()} for i in probe_idx]

    out = {
        "arch": [3, 64, 64, 3],
        "activation": "tanh",
        "weights": [W.tolist() for W in net["weights"]],
        "biases": [b.tolist() for b in net["biases"]],
        "input_mean": in_mean.tolist(),
        "input_std": in_std.tolist(),
        "output_mean": out_mean.tolist(),
        "output_std": out_std.tolist(),
        "metadata": {
            "b": meta["b"],
            "dataset_id": f"{os.path.basename(args.dataset)}:{digest}",
            "seed": args.seed,
            "adam_train_mse": adam_loss,
            "final_train_mse": history[-1][2],
            "val_mse_normalized": val_mse_norm,
            "val_mse_original": val_mse_orig,
        },
        "probes": probes,
    }
    with open(args.out, "w") as f:
        json.dump(out, f, indent=1)
        f.write("\n")

    stem = os.path.splitext(args.out)[0]
    with open(stem + "_loss.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["phase", "iteration", "train_mse", "val_mse"])
        w.writerows(history)
    with open(stem + "_parity.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["l1_true", "l2_true", "l3_true", "l1_pred", "l2_pred", "l3_pred"])
        for t, q in zip(lam[val], pred_val):
            w.writerow([*t.tolist(), *q.tolist()])
    print(f"validation mse normalized {val_mse_norm:.3e}, original units {val_mse_orig:.3e}")


if __name__ == "__main__":
    main()
