"""The interoperability harness: smoke tests, the transfer matrix, and the scale drill, each producing a JSON report."""

from .dataset import Dataset, DatasetConfig
from .drill import Drill, cmd_scale_drill
from .matrix import cmd_matrix
from .mesh import LocalMesh, Member, Mesh, MeshConfig, RemoteMesh, open_mesh
from .report import Status, validate, write
from .smoke import Smoke, cmd_smoke


__all__ = ['Dataset', 'DatasetConfig', 'Drill', 'LocalMesh', 'Member', 'Mesh', 'MeshConfig', 'RemoteMesh', 'Smoke',
		'Status', 'cmd_matrix', 'cmd_scale_drill', 'cmd_smoke', 'open_mesh', 'validate', 'write']
