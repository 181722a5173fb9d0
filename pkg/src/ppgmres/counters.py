"""Operation tallies: the cost currency of every solver in this package."""
from dataclasses import dataclass, fields


@dataclass
class OpCounter:
    """Running counts of matrix-vector products, daxpys and dot products.

    A daxpy is any length-n update of the form ``y += a*x`` or ``y = a*x``;
    a dot is any length-n inner product or norm. ``vops`` is their sum.
    """

    mvps: int = 0
    daxpys: int = 0
    dots: int = 0

    @property
    def vops(self):
        return self.daxpys + self.dots

    def add(self, other):
        self.mvps += other.mvps
        self.daxpys += other.daxpys
        self.dots += other.dots
        return self

    def copy(self):
        return OpCounter(self.mvps, self.daxpys, self.dots)

    def __sub__(self, other):
        return OpCounter(self.mvps - other.mvps, self.daxpys - other.daxpys,
                         self.dots - other.dots)

    def as_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["vops"] = self.vops
        return d


def null_counter():
    """A throwaway counter for callers that do not care about costs."""
    return OpCounter()
