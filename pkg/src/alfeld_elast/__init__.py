"""Mixed finite elements for linear elasticity on Alfeld splits of tetrahedral meshes."""
from .materials import ComplianceTensor, manufactured_case, parse_material
from .mesh import AlfeldComplex, SimplexMesh, alfeld_split, generate_cube_mesh, read_mesh
from .methods import DiscreteSolution, equivalence_check, run_method
from .postprocess import postprocess_displacement

__version__ = "0.1.0"
