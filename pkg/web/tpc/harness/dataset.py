"""Deterministic pseudo-random datasets: the same seed always yields the same bytes."""

from hashlib import sha256
from random import Random
from typing import Iterator, List, NamedTuple

from typeguard import check_argument_types

from ..exc import ConfigError
from ..path import VirtualPath, normalize_path


MiB = 1024 * 1024


class File(NamedTuple):
	index: int
	path: VirtualPath
	size: int
	sha256: str


class DatasetConfig:
	__slots__ = ('file_count', 'file_size_bytes', 'seed')
	
	def __init__(self, *, file_count:int=1, file_size_bytes:int=MiB, seed:int=0) -> None:
		assert check_argument_types()
		
		if file_count < 1:
			raise ConfigError('dataset.file_count', "At least one file is required.")
		
		if file_size_bytes < 0:
			raise ConfigError('dataset.file_size_bytes', "Must not be negative.")
		
		self.file_count = file_count
		self.file_size_bytes = file_size_bytes
		self.seed = seed
	
	def __repr__(self) -> str:
		return f"DatasetConfig(file_count={self.file_count}, file_size_bytes={self.file_size_bytes}, seed={self.seed})"
	
	@classmethod
	def from_dict(cls, data:dict) -> 'DatasetConfig':
		unknown = set(data) - set(cls.__slots__)
		
		if unknown:
			raise ConfigError('dataset', f"Unknown options: {', '.join(sorted(unknown))}")
		
		return cls(**data)
	
	def as_dict(self) -> dict:
		return {'file_count': self.file_count, 'file_size_bytes': self.file_size_bytes, 'seed': self.seed}


def content(seed:int, index:int, size:int) -> bytes:
	"""The bytes of file `index` of the dataset seeded with `seed`."""
	return Random(f"web.tpc:{seed}:{index}").randbytes(size)


class Dataset:
	"""The files of a dataset laid out beneath a prefix path."""
	
	def __init__(self, config:DatasetConfig, prefix:str='/dataset') -> None:
		self.config = config
		self.prefix = normalize_path(prefix)
		self.files: List[File] = [File(i, self.prefix / f'file-{i:04d}', config.file_size_bytes,
				sha256(self.content(i)).hexdigest()) for i in range(config.file_count)]
	
	def __repr__(self) -> str:
		return f"Dataset({str(self.prefix)!r}, {self.config!r})"
	
	def __len__(self) -> int:
		return len(self.files)
	
	def __iter__(self) -> Iterator[File]:
		return iter(self.files)
	
	@property
	def total_bytes(self) -> int:
		return sum(f.size for f in self.files)
	
	def content(self, index:int) -> bytes:
		return content(self.config.seed, index, self.config.file_size_bytes)
