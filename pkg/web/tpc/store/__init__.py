"""Path-addressed object storage behind each endpoint."""

from typing import Optional

from marrow.package.loader import load
from typeguard import check_argument_types

from ..exc import ConfigError
from .base import ByteRange, Entry, ObjectRecord, Store
from .directory import DirectoryStore
from .memory import MemoryStore


BACKENDS = {
		'memory': MemoryStore,
		'directory': DirectoryStore,
	}


class StoreConfig:
	"""Which backend to construct, and its quota.

	The backend is named `memory`, `directory`, or given as a `module:Class` reference (or plugin name within the
	`web.tpc.store` namespace) to a `Store` subclass accepting `root` and `capacity_bytes` keyword arguments.
	"""
	
	__slots__ = ('backend', 'root', 'capacity_bytes')
	
	backend: str
	root: Optional[str]
	capacity_bytes: Optional[int]
	
	def __init__(self, *, backend:str='memory', root:Optional[str]=None, capacity_bytes:Optional[int]=None) -> None:
		assert check_argument_types()
		
		if backend == 'directory' and not root:
			raise ConfigError('store.root', "The directory backend requires a root directory.")
		
		if capacity_bytes is not None and capacity_bytes < 0:
			raise ConfigError('store.capacity_bytes', "Must not be negative.")
		
		self.backend = backend
		self.root = root
		self.capacity_bytes = capacity_bytes
	
	def __repr__(self) -> str:
		return f"StoreConfig({self.backend!r}, root={self.root!r}, capacity_bytes={self.capacity_bytes!r})"
	
	@classmethod
	def from_dict(cls, data:dict) -> 'StoreConfig':
		unknown = set(data) - set(cls.__slots__)
		
		if unknown:
			raise ConfigError('store', f"Unknown options: {', '.join(sorted(unknown))}")
		
		return cls(**data)
	
	def as_dict(self) -> dict:
		return {'backend': self.backend, 'root': self.root, 'capacity_bytes': self.capacity_bytes}
	
	def build(self) -> Store:
		factory = BACKENDS.get(self.backend)
		
		try:
			factory = factory or load(self.backend, 'web.tpc.store')
		except (ImportError, LookupError, AttributeError) as e:
			raise ConfigError('store.backend', f"Unable to load {self.backend!r}: {e}")
		
		kw = {'capacity_bytes': self.capacity_bytes}
		
		if self.root and factory is not MemoryStore:
			kw['root'] = self.root
		
		return factory(**kw)


__all__ = ['BACKENDS', 'ByteRange', 'DirectoryStore', 'Entry', 'MemoryStore', 'ObjectRecord', 'Store', 'StoreConfig']
