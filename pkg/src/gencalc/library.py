"""Built-in example geometries.

Each entry is a literal document in the input format, parsed on demand, so
the library also exercises the parser and round-trips by construction.

Bundled structures:

* ``s3``: the 3-sphere frame with d a1 = a2^a3 (cyclic); the split family
  E = span{a2, a3, x2, x3} twisted by functions f, g, the untwisted split
  EZERO, and two F-structures on E given by J-matrices whose +i eigenbundle
  is span{x3-tau*x2, a2+tau*a3} (F41) resp. span{x2+tau*a3, x3-tau*a2}
  (F42), plus a sample deformation of F41.
* ``torusN`` (1 <= N <= 10): the abelian frame, no bundles.
* ``heisenberg3``: d a3 = a1^a2.
* ``cosymplectic5``: abelian, split ECO of rank 8 and the leafwise
  symplectic F-structure OM on it.
* ``symplectic-torusN`` (even N): abelian with E = TM + T*M and the
  F-structure OM = omega wedge + contraction by the dual bivector.
* ``complex-torus6``: abelian with the constant complex-type J as CPLX.
"""

from __future__ import annotations

from .geometry import Geometry, parse_geometry

_S3_DOC = """\
[manifold] name=s3, dim=3, coframe=a1,a2,a3
[structure]
d a1 = a2^a3
d a2 = (-1)*a1^a3
d a3 = a1^a2
[functions] f, g, c:tau, c:w
[section x1] X1+(f)*a2+(g)*a3
[section x2] X2+(-f)*a1
[section x3] X3+(-g)*a1
[split E] sections=a2,a3,x2,x3
[split EZERO] sections=a2,a3,X2,X3
[fstructure F41] J =
0 0 0 0 0 0
0 ((i)*tau+(i)*~tau)/(tau-~tau) ((2*i)*tau*~tau)/(tau-~tau) 0 0 0
0 ((-2*i))/(tau-~tau) ((-i)*tau+(-i)*~tau)/(tau-~tau) 0 0 0
0 ((-i)*f*tau+(-i)*f*~tau+(2*i)*g)/(tau-~tau) ((-2*i)*f*tau*~tau+(i)*g*tau+(i)*g*~tau)/(tau-~tau) 0 0 0
((i)*f*tau+(i)*f*~tau+(-2*i)*g)/(tau-~tau) 0 0 0 ((-i)*tau+(-i)*~tau)/(tau-~tau) ((2*i))/(tau-~tau)
((2*i)*f*tau*~tau+(-i)*g*tau+(-i)*g*~tau)/(tau-~tau) 0 0 0 ((-2*i)*tau*~tau)/(tau-~tau) ((i)*tau+(i)*~tau)/(tau-~tau)
[fstructure F42] J =
0 0 0 0 0 0
((-2*i)*g)/(tau-~tau) ((-i)*tau+(-i)*~tau)/(tau-~tau) 0 0 0 ((2*i))/(tau-~tau)
((2*i)*f)/(tau-~tau) 0 ((-i)*tau+(-i)*~tau)/(tau-~tau) 0 ((-2*i))/(tau-~tau) 0
0 ((i)*f*tau+(i)*f*~tau)/(tau-~tau) ((i)*g*tau+(i)*g*~tau)/(tau-~tau) 0 ((2*i)*g)/(tau-~tau) ((-2*i)*f)/(tau-~tau)
((-i)*f*tau+(-i)*f*~tau)/(tau-~tau) 0 ((2*i)*tau*~tau)/(tau-~tau) 0 ((i)*tau+(i)*~tau)/(tau-~tau) 0
((-i)*g*tau+(-i)*g*~tau)/(tau-~tau) ((-2*i)*tau*~tau)/(tau-~tau) 0 0 0 ((i)*tau+(i)*~tau)/(tau-~tau)
[deformation DEF41] base=F41
eps 1 2 = w
"""

_HEISENBERG3_DOC = """\
[manifold] name=heisenberg3, dim=3, coframe=a1,a2,a3
[structure]
d a3 = a1^a2
[params] tau
[functions] f, g, c:w
"""

_COSYMPLECTIC5_DOC = """\
[manifold] name=cosymplectic5, dim=5, coframe=a1,a2,a3,a4,a5
[params] tau
[functions] f, g, c:w
[split ECO] sections=X1,X2,X3,X4,a1,a2,a3,a4
[fstructure OM] Phi = a1^a2+a3^a4+X1^X2+X3^X4
"""

_COMPLEX_TORUS6_DOC = """\
[manifold] name=complex-torus6, dim=6, coframe=a1,a2,a3,a4,a5,a6
[params] tau
[functions] f, g, c:w
[split FULL] sections=X1,X2,X3,X4,X5,X6,a1,a2,a3,a4,a5,a6
[fstructure CPLX] J =
0 1 0 0 0 0 0 0 0 0 0 0
-1 0 0 0 0 0 0 0 0 0 0 0
0 0 0 1 0 0 0 0 0 0 0 0
0 0 -1 0 0 0 0 0 0 0 0 0
0 0 0 0 0 1 0 0 0 0 0 0
0 0 0 0 -1 0 0 0 0 0 0 0
0 0 0 0 0 0 0 1 0 0 0 0
0 0 0 0 0 0 -1 0 0 0 0 0
0 0 0 0 0 0 0 0 0 1 0 0
0 0 0 0 0 0 0 0 -1 0 0 0
0 0 0 0 0 0 0 0 0 0 0 1
0 0 0 0 0 0 0 0 0 0 -1 0
"""


def _torus_doc(n: int, symplectic: bool) -> str:
    pre = "symplectic-torus" if symplectic else "torus"
    cof = ",".join(f"a{k}" for k in range(1, n + 1))
    out = [f"[manifold] name={pre}{n}, dim={n}, coframe={cof}",
           "[params] tau",
           "[functions] f, g, c:w"]
    if symplectic:
        secs = ",".join([f"X{k}" for k in range(1, n + 1)]
                        + [f"a{k}" for k in range(1, n + 1)])
        out.append(f"[split FULL] sections={secs}")
        terms = [f"a{k}^a{k + 1}" for k in range(1, n, 2)]
        terms += [f"X{k}^X{k + 1}" for k in range(1, n, 2)]
        out.append("[fstructure OM] Phi = " + "+".join(terms))
    return "\n".join(out) + "\n"


def builtin_names() -> list:
    names = ["s3", "heisenberg3", "cosymplectic5", "complex-torus6"]
    names += [f"torus{n}" for n in range(1, 11)]
    names += [f"symplectic-torus{n}" for n in range(2, 11, 2)]
    return names


def builtin(name: str) -> Geometry:
    """Return a built-in geometry with its bundled structures."""
    if name == "s3":
        return parse_geometry(_S3_DOC)
    if name == "heisenberg3":
        return parse_geometry(_HEISENBERG3_DOC)
    if name == "cosymplectic5":
        return parse_geometry(_COSYMPLECTIC5_DOC)
    if name == "complex-torus6":
        return parse_geometry(_COMPLEX_TORUS6_DOC)
    if name.startswith("symplectic-torus"):
        tail = name[len("symplectic-torus"):]
        if tail.isdigit() and int(tail) % 2 == 0 and 2 <= int(tail) <= 10:
            return parse_geometry(_torus_doc(int(tail), True))
    elif name.startswith("torus"):
        tail = name[len("torus"):]
        if tail.isdigit() and 1 <= int(tail) <= 10:
            return parse_geometry(_torus_doc(int(tail), False))
    raise ValueError(f"unknown builtin geometry {name!r}")
