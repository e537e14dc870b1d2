"""Skill archive with novelty-gated insertion and quality replacement.

Stored outcomes keep pairwise Euclidean distance >= r_novel.  A candidate
closer than that to existing skills may replace its nearest neighbor when it
has strictly higher quality, but only if removing that neighbor restores the
spacing; otherwise it is rejected.  Nearest-neighbor queries are linear scans
over cached coordinate arrays, plenty at desk scale.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .core import ControllerParams, Outcome, Skill

__all__ = [
    "Archive",
    "InsertOutcome",
    "InsertResult",
    "ArchiveFormatError",
    "save",
    "load",
]


class ArchiveFormatError(ValueError):
    """Malformed archive file; message names the offending line."""


class InsertOutcome(enum.Enum):
    ADDED = "added"
    REPLACED = "replaced"
    REJECTED = "rejected"


@dataclass(frozen=True)
class InsertResult:
    outcome: InsertOutcome
    replaced: Skill | None = None

    @property
    def accepted(self) -> bool:
        return self.outcome is not InsertOutcome.REJECTED


class Archive:
    """Ordered set of skills unique in outcome space at radius r_novel."""

    def __init__(self, r_novel: float, env_kind: str = "", dim_params: int = 0,
                 dim_outcome: int = 0, seed: int = 0):
        if r_novel <= 0:
            raise ValueError("r_novel must be positive")
        self.r_novel = float(r_novel)
        self.env_kind = env_kind
        self.dim_params = dim_params
        self.dim_outcome = dim_outcome
        self.seed = seed
        self.skills: list[Skill] = []
        self._outcomes: np.ndarray | None = None
        self._params: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.skills)

    def _matrices(self):
        if self._outcomes is None:
            self._outcomes = np.array([s.outcome.values for s in self.skills])
            self._params = np.array([s.params.values for s in self.skills])
        return self._outcomes, self._params

    def outcomes(self) -> np.ndarray:
        if not self.skills:
            return np.empty((0, self.dim_outcome))
        return self._matrices()[0]

    def qualities(self) -> np.ndarray:
        return np.array([s.quality for s in self.skills])

    def try_insert(self, skill: Skill) -> InsertResult:
        """Apply the novelty/quality rule; preserves the spacing invariant.

        Added when no stored outcome is within r_novel; otherwise the nearest
        stored skill is replaced when the candidate has strictly higher
        quality and conflicts with nothing else; otherwise rejected.
        """
        if not skill.outcome.valid:
            raise ValueError("cannot insert a skill with an invalid outcome")
        if not self.skills:
            self._append(skill)
            return InsertResult(InsertOutcome.ADDED)
        outs, _ = self._matrices()
        dists = np.linalg.norm(outs - skill.outcome.values, axis=1)
        nearest = int(np.argmin(dists))
        if dists[nearest] >= self.r_novel:
            self._append(skill)
            return InsertResult(InsertOutcome.ADDED)
        if skill.quality > self.skills[nearest].quality:
            others = np.delete(dists, nearest)
            if others.size == 0 or np.min(others) >= self.r_novel:
                old = self.skills[nearest]
                self.skills[nearest] = skill
                self._outcomes[nearest] = skill.outcome.values
                self._params[nearest] = skill.params.values
                return InsertResult(InsertOutcome.REPLACED, replaced=old)
        return InsertResult(InsertOutcome.REJECTED)

    def _append(self, skill: Skill):
        self.skills.append(skill)
        self._outcomes = None
        self._params = None

    def nearest_outcome(self, target) -> Skill:
        """Skill whose outcome is Euclidean-nearest to target; ties keep the
        earliest-inserted skill."""
        if not self.skills:
            raise ValueError("archive is empty")
        outs, _ = self._matrices()
        dists = np.linalg.norm(outs - np.asarray(target, dtype=float), axis=1)
        return self.skills[int(np.argmin(dists))]

    def knn_params(self, theta_c, k: int) -> list[Skill]:
        """k skills nearest in parameter space; ties break by insertion order.

        Asking for more neighbors than stored returns everything.
        """
        if not self.skills:
            raise ValueError("archive is empty")
        if k < 1:
            raise ValueError("k must be >= 1")
        _, params = self._matrices()
        query = theta_c.values if isinstance(theta_c, ControllerParams) else np.asarray(theta_c, dtype=float)
        dists = np.linalg.norm(params - query, axis=1)
        order = np.argsort(dists, kind="stable")
        return [self.skills[i] for i in order[: min(k, len(self.skills))]]

    def min_pairwise_distance(self) -> float:
        """Smallest outcome-space distance between stored skills (inf if < 2)."""
        if len(self.skills) < 2:
            return float("inf")
        outs, _ = self._matrices()
        diff = outs[:, None, :] - outs[None, :, :]
        d = np.linalg.norm(diff, axis=2)
        d[np.diag_indices(len(self.skills))] = np.inf
        return float(d.min())


# ---------------------------------------------------------------------------
# Persistence: one JSON header line, then one JSON object per skill
# ---------------------------------------------------------------------------

def save(archive: Archive, path, bounds: np.ndarray | None = None) -> None:
    """Write the archive as JSON lines (UTF-8, LF).

    The header carries env/D/d/r_novel/seed plus the parameter bounds so a
    file round-trips without consulting the environment registry.
    """
    if bounds is None:
        if archive.skills:
            bounds = archive.skills[0].params.bounds
        else:
            bounds = np.empty((0, 2))
    header = {
        "env": archive.env_kind,
        "D": archive.dim_params,
        "d": archive.dim_outcome,
        "r_novel": archive.r_novel,
        "seed": archive.seed,
        "bounds": np.asarray(bounds).tolist(),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header) + "\n")
        for skill in archive.skills:
            record = {
                "theta": skill.params.values.tolist(),
                "outcome": skill.outcome.values.tolist(),
                "quality": skill.quality,
            }
            fh.write(json.dumps(record) + "\n")


def load(path) -> Archive:
    """Read an archive written by :func:`save`; validates arity per line."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ArchiveFormatError(f"{path}:1: empty archive file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ArchiveFormatError(f"{path}:1: bad header JSON: {exc}") from None
    for key in ("env", "D", "d", "r_novel", "seed"):
        if key not in header:
            raise ArchiveFormatError(f"{path}:1: header missing key {key!r}")
    archive = Archive(
        r_novel=float(header["r_novel"]),
        env_kind=header["env"],
        dim_params=int(header["D"]),
        dim_outcome=int(header["d"]),
        seed=int(header["seed"]),
    )
    bounds = np.asarray(header.get("bounds", []), dtype=float)
    if bounds.size == 0:
        bounds = np.tile([-np.inf, np.inf], (archive.dim_params, 1))
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ArchiveFormatError(f"{path}:{lineno}: bad JSON: {exc}") from None
        try:
            theta = rec["theta"]
            outcome = rec["outcome"]
            q = float(rec["quality"])
        except (KeyError, TypeError) as exc:
            raise ArchiveFormatError(f"{path}:{lineno}: missing field {exc}") from None
        if len(theta) != archive.dim_params:
            raise ArchiveFormatError(
                f"{path}:{lineno}: theta arity {len(theta)} != D={archive.dim_params}"
            )
        if len(outcome) != archive.dim_outcome:
            raise ArchiveFormatError(
                f"{path}:{lineno}: outcome arity {len(outcome)} != d={archive.dim_outcome}"
            )
        skill = Skill(
            params=ControllerParams(values=theta, bounds=bounds),
            outcome=Outcome(values=outcome),
            quality=q,
        )
        archive.skills.append(skill)
    archive._outcomes = None
    archive._params = None
    return archive
