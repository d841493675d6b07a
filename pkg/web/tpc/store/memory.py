"""A namespace held entirely in process memory.

Used by the test harness and by ephemeral endpoints. Content is kept as immutable `bytes`, so a snapshot taken by a
reader remains valid however many times the object is subsequently replaced.
"""

from typing import Dict, Iterable, Iterator, List, Optional, Tuple

from ..path import VirtualPath
from .base import CHUNK, Entry, ObjectRecord, Staged, Store


class MemoryStore(Store):
	def __init__(self, capacity_bytes:Optional[int]=None) -> None:
		super().__init__(capacity_bytes)
		
		self._objects: Dict[VirtualPath, Tuple[ObjectRecord, bytes]] = {}
		self._generations: Dict[VirtualPath, int] = {}  # Survives deletion; generations never repeat.
	
	def _record(self, path:VirtualPath) -> Optional[ObjectRecord]:
		entry = self._objects.get(path)
		return entry[0] if entry else None
	
	def _children(self, path:VirtualPath) -> List[Entry]:
		depth = len(path)
		found = {}
		
		for candidate, (record, _) in self._objects.items():
			if len(candidate) <= depth or not path.contains(candidate):
				continue
			
			name = candidate.segments[depth]
			
			if len(candidate) == depth + 1:
				found[name] = Entry(name, False, record)
			else:
				found.setdefault(name, Entry(name, True, None))
		
		return list(found.values())
	
	def _stage(self, content:Iterable[bytes]) -> Staged:
		buffer = bytearray()
		size, digest = self._hash(content, buffer.extend)
		return Staged(size, digest, bytes(buffer))
	
	def _commit(self, path:VirtualPath, staged:Staged, record:ObjectRecord) -> None:
		self._objects[path] = (record, staged.handle)
		self._generations[path] = record.generation
	
	def _discard(self, staged:Staged) -> None:
		pass
	
	def _generation(self, path:VirtualPath, existing:Optional[ObjectRecord]) -> int:
		return self._generations.get(path, 0) + 1
	
	def _open(self, path:VirtualPath, record:ObjectRecord) -> bytes:
		return self._objects[path][1]
	
	def _read(self, snapshot:bytes, start:int, end:int) -> Iterator[bytes]:
		view = memoryview(snapshot)
		
		for offset in range(start, end, CHUNK):
			yield bytes(view[offset:min(offset + CHUNK, end)])
	
	def _remove(self, path:VirtualPath, record:ObjectRecord) -> None:
		del self._objects[path]
