"""Combinatorics of weighted triangulations: subsets, links, hierarchy, disks."""

from .decomposition import (Decomposition, Element, boundary_cycle, build_disk,
                            build_quotient, decompose)
from .subsets import (LinkFace, SubsetReport, Verdict, VertexSubset, chi_from_counts,
                      classify, connected_subsets, link, phi, phi_distinct, subcomplex_chi)
from .triangulation import (CornerComplex, DiskTriangulation, Edge, WeightedTriangulation,
                            build, from_document, parse_triangulation, to_document)

__all__ = [
    "CornerComplex", "Decomposition", "DiskTriangulation", "Edge", "Element", "LinkFace",
    "SubsetReport", "Verdict", "VertexSubset", "WeightedTriangulation", "boundary_cycle",
    "build", "build_disk", "build_quotient", "chi_from_counts", "classify",
    "connected_subsets", "decompose", "from_document", "link", "parse_triangulation",
    "phi", "phi_distinct", "subcomplex_chi", "to_document",
]
