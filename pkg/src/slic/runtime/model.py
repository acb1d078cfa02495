"""A compiled model: data loaded once, log density and gradients on the unconstrained scale."""

from __future__ import annotations

import itertools
import math

import numpy as np

from ..errors import DataError, DimensionError
from ..frontend import ast as A
from ..levels import Level, TypedProgram, infer
from ..shredder import BlockedProgram, shred
from .dual import Dual
from .interp import Store, compile_expr, compile_stmts, decl_types
from .transforms import ParamInfo, constrain, flatten, reshape, unconstrain


def _coerce(name, base, value, dims, lower, upper):
    if dims:
        if not isinstance(value, list) or len(value) != dims[0]:
            got = len(value) if isinstance(value, list) else "a scalar"
            raise DataError(f"data {name!r}: expected an array of length {dims[0]}, got {got}")
        return [_coerce(name, base, v, dims[1:], lower, upper) for v in value]
    if isinstance(value, list):
        raise DataError(f"data {name!r}: expected a scalar, got an array")
    if base == "bool":
        if value not in (0, 1, True, False):
            raise DataError(f"data {name!r}: expected a boolean, got {value!r}")
        return bool(value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DataError(f"data {name!r}: expected a number, got {value!r}")
    if base == "int":
        if float(value) != math.floor(float(value)):
            raise DataError(f"data {name!r}: expected an integer, got {value!r}")
        v: int | float = int(value)
    else:
        v = float(value)
    if (lower is not None and v < lower) or (upper is not None and v > upper):
        raise DataError(f"data {name!r}: value {v} violates its bounds")
    return v


def load_data(decls: list[A.Decl], data: dict | None) -> dict:
    """Check and coerce JSON-style input values against their declarations."""
    data = dict(data or {})
    out: dict = {}
    for d in decls:
        if d.name not in data:
            raise DataError(f"missing data for {d.name!r}", d.span)
        dims = [compile_expr(x)(out) for x in d.type.dims]
        out[d.name] = _coerce(d.name, d.type.base, data[d.name], dims, d.type.lower, d.type.upper)
    return out


def _element_names(name: str, shape: tuple[int, ...]) -> list[str]:
    if not shape:
        return [name]
    return [f"{name}[{','.join(map(str, idx))}]" for idx in itertools.product(*[range(1, n + 1) for n in shape])]


class Model:
    """Everything needed to evaluate a program's posterior density.

    The program is level-typed and shredded; the data and transformed-data
    blocks run once at construction.
    """

    def __init__(self, program: A.Program, data: dict | None = None, typed: TypedProgram | None = None,
                 fast: bool = True):
        self.program = program
        self.typed = typed or infer(program)
        self.blocked: BlockedProgram = shred(self.typed)
        b = self.blocked
        self.types = decl_types(b.as_program())
        self.generative = frozenset(n for n, lv in self.typed.levels.items() if lv == Level.GENQUANT)
        self.data = load_data(b.data, data)
        store = Store(self.data)
        compile_stmts(b.tdata_decls + b.tdata, self.types)(store)
        self.base_values = store.values
        self._model = compile_stmts(b.parameters + b.model_decls + b.model, self.types)
        self._genquant = compile_stmts(b.genquant_decls + b.genquant, self.types, self.generative)
        self.params: list[ParamInfo] = []
        offset = 0
        for d in b.parameters:
            shape = tuple(compile_expr(x)(self.base_values) for x in d.type.dims)
            if any(n < 0 for n in shape):
                raise DimensionError(f"negative size for parameter {d.name!r}", d.span)
            info = ParamInfo(d.name, shape, d.type.lower, d.type.upper, offset)
            self.params.append(info)
            offset += info.size
        self.dim = offset
        self._fast = None
        self._fast_tried = not fast

    # -- parameter vectors -------------------------------------------------------

    @property
    def param_names(self) -> list[str]:
        return [n for p in self.params for n in _element_names(p.name, p.shape)]

    @property
    def genquant_decls(self) -> list[A.Decl]:
        return list(self.blocked.genquant_decls)

    def _check(self, u) -> None:
        if len(u) != self.dim:
            raise DimensionError(f"expected {self.dim} unconstrained values, got {len(u)}")

    def _bind(self, u, values: dict):
        """Constrain ``u`` into ``values``; returns the summed log-Jacobian."""
        lj = 0.0
        for p in self.params:
            flat = []
            for k in range(p.size):
                theta, j = constrain(u[p.offset + k], p.lower, p.upper)
                flat.append(theta)
                lj = lj + j
            values[p.name] = reshape(flat, p.shape)
        return lj

    def constrain(self, u) -> dict:
        self._check(u)
        values: dict = {}
        self._bind([float(x) for x in u], values)
        return values

    def constrained_vector(self, u) -> np.ndarray:
        vals = self.constrain(u)
        return np.array([float(x) for p in self.params for x in flatten(vals[p.name])])

    def unconstrain(self, values: dict) -> np.ndarray:
        out = np.empty(self.dim)
        for p in self.params:
            flat = flatten(values[p.name])
            if len(flat) != p.size:
                raise DimensionError(f"parameter {p.name!r} needs {p.size} values, got {len(flat)}")
            for k, t in enumerate(flat):
                out[p.offset + k] = unconstrain(float(t), p.lower, p.upper)
        return out

    # -- densities -----------------------------------------------------------------

    def _run_model(self, u, jacobian: bool = True) -> Store:
        store = Store.__new__(Store)
        store.values = dict(self.base_values)
        store.rng = None
        store.steps = 0
        store.observer = None
        lj = self._bind(u, store.values)
        store.target = lj if jacobian else 0.0
        self._model(store)
        return store

    def log_density(self, u, jacobian: bool = True) -> float:
        """Log target on the unconstrained scale via the reference interpreter."""
        self._check(u)
        t = self._run_model([float(x) for x in u], jacobian).target
        return float(t.value if isinstance(t, Dual) else t)

    def grad_log_density_dual(self, u, jacobian: bool = True) -> tuple[float, np.ndarray]:
        """Value and gradient by forward-mode duals through the reference interpreter."""
        self._check(u)
        n = self.dim
        duals = [Dual.variable(float(x), i, n) for i, x in enumerate(u)]
        t = self._run_model(duals, jacobian).target
        if isinstance(t, Dual):
            return t.value, t.tangent.copy()
        return float(t), np.zeros(n)

    def grad_log_density(self, u, jacobian: bool = True) -> np.ndarray:
        return self.log_density_and_grad(u, jacobian)[1]

    def fast(self):
        """Numba-compiled density+gradient, or None when the program is unsupported."""
        if not self._fast_tried:
            self._fast_tried = True
            from .codegen import compile_model

            self._fast = compile_model(self)
        return self._fast

    def log_density_and_grad(self, u, jacobian: bool = True) -> tuple[float, np.ndarray]:
        self._check(u)
        f = self.fast() if jacobian else None
        if f is not None:
            return f(np.asarray(u, dtype=float))
        return self.grad_log_density_dual(u, jacobian)

    def density_wrt(self, names: tuple[str, ...]):
        """``f(u, extra) -> (lp, grad)`` where ``extra`` overrides data ``names`` (flattened).

        The gradient covers ``u`` followed by every entry of ``extra``.
        """
        names = tuple(names)
        if not self._fast_tried or self._fast is not None:
            from .codegen import compile_model

            f = compile_model(self, wrt=names)
            if f is not None:
                return f
        shapes = [_shape_of(self.base_values[n]) for n in names]

        def slow(u, extra):
            n = self.dim
            total = n + len(extra)
            store = Store.__new__(Store)
            store.values = dict(self.base_values)
            store.rng, store.steps, store.observer = None, 0, None
            k = n
            for name, shape in zip(names, shapes):
                size = math.prod(shape)
                flat = [Dual.variable(float(x), k + i, total) for i, x in enumerate(extra[k - n:k - n + size])]
                store.values[name] = reshape(flat, shape)
                k += size
            store.target = self._bind([Dual.variable(float(x), i, total) for i, x in enumerate(u)], store.values)
            self._model(store)
            t = store.target
            if isinstance(t, Dual):
                return t.value, t.tangent.copy()
            return float(t), np.zeros(total)

        return slow

    # -- generated quantities --------------------------------------------------------

    def run_genquant(self, u, rng: np.random.Generator) -> dict:
        """Run the model block at ``u`` (for deterministic quantities) then draw genquants."""
        store = self._run_model([float(x) for x in u])
        store.rng = rng
        self._genquant(store)
        return {d.name: store.values[d.name] for d in self.blocked.genquant_decls}

    def genquant_runner(self, u) -> "GenQuantRunner":
        return GenQuantRunner(self, u)

    def genquant_names(self, values: dict) -> list[str]:
        out = []
        for d in self.blocked.genquant_decls:
            out += _element_names(d.name, _shape_of(values[d.name]))
        return out


def _shape_of(v) -> tuple[int, ...]:
    shape = []
    while isinstance(v, list):
        shape.append(len(v))
        v = v[0] if v else None
    return tuple(shape)


class GenQuantRunner:
    """Repeated genquant draws at fixed parameters, reusing one model-block run."""

    def __init__(self, model: Model, u):
        self.model = model
        self.base = model._run_model([float(x) for x in u])

    def draw(self, rng: np.random.Generator) -> dict:
        store = self.base.fork()
        store.rng = rng
        self.model._genquant(store)
        return {d.name: store.values[d.name] for d in self.model.blocked.genquant_decls}
