"""A namespace persisted beneath a local directory.

Each object is a file; its metadata lives beside it in a `<name>.meta` JSON sidecar. Uploads are received into a
temporary file under `<root>/.tpc-tmp` and renamed into place, so an interrupted upload never becomes visible. Readers
hold an open descriptor to the generation they looked up; a later rename replaces the directory entry, not the inode
being read.
"""

import json
import os

from pathlib import Path
from tempfile import NamedTemporaryFile
from typing import BinaryIO, Iterable, Iterator, List, Optional

from ..exc import ConfigError, Kind, TpcError
from ..path import VirtualPath
from .base import CHUNK, Entry, ObjectRecord, Staged, Store


log = __import__('logging').getLogger(__name__)

TEMPORARY = '.tpc-tmp'
SIDECAR = '.meta'


class DirectoryStore(Store):
	root: Path
	
	def __init__(self, root:str, capacity_bytes:Optional[int]=None) -> None:
		super().__init__(capacity_bytes)
		
		self.root = Path(root).resolve()
		self._temporary = self.root / TEMPORARY
		self._temporary.mkdir(parents=True, exist_ok=True)
		
		for stale in self._temporary.iterdir():  # Uploads interrupted by a previous process.
			stale.unlink()
		
		self._used = sum(record.size for record in self._scan(self.root, ()))
		
		if capacity_bytes is not None and self._used > capacity_bytes:
			raise ConfigError('capacity_bytes', f"{self._used} bytes are already stored beneath {self.root}, "
					f"exceeding the capacity of {capacity_bytes}.")
		
		log.info(f"Opened directory store at {self.root}.", extra=dict(root=str(self.root), used=self._used))
	
	def __repr__(self) -> str:
		return f"{self.__class__.__name__}({str(self.root)!r}, capacity_bytes={self.capacity_bytes!r})"
	
	def _file(self, path:VirtualPath) -> Path:
		return self.root.joinpath(*path.segments)
	
	def _sidecar(self, path:VirtualPath) -> Path:
		file = self._file(path)
		return file.with_name(file.name + SIDECAR)
	
	def _validate(self, path:VirtualPath) -> None:
		if path.segments and path.segments[0] == TEMPORARY:
			raise TpcError(Kind.BAD_REQUEST, f"Reserved path: {path}")
		
		for segment in path.segments:
			if segment.endswith(SIDECAR):
				raise TpcError(Kind.BAD_REQUEST, f"Path segments may not end in {SIDECAR}: {path}")
	
	def _load(self, path:VirtualPath) -> Optional[ObjectRecord]:
		try:
			meta = json.loads(self._sidecar(path).read_text('utf-8'))
		except FileNotFoundError:
			return None
		
		return ObjectRecord(path, meta['size'], meta['sha256'], meta['created_at'], meta['generation'])
	
	def _scan(self, directory:Path, prefix:tuple) -> Iterator[ObjectRecord]:
		for entry in os.scandir(directory):
			if entry.is_dir():
				if not prefix and entry.name == TEMPORARY:
					continue
				
				yield from self._scan(Path(entry.path), prefix + (entry.name, ))
			
			elif not entry.name.endswith(SIDECAR):
				record = self._load(VirtualPath(prefix + (entry.name, )))
				
				if record is not None:
					yield record
	
	def _record(self, path:VirtualPath) -> Optional[ObjectRecord]:
		if path.is_root or not self._file(path).is_file():
			return None
		
		try:
			self._validate(path)
		except TpcError:
			return None
		
		return self._load(path)
	
	def _children(self, path:VirtualPath) -> List[Entry]:
		directory = self._file(path)
		
		if not directory.is_dir():
			return []
		
		entries = []
		
		for entry in os.scandir(directory):
			if (path.is_root and entry.name == TEMPORARY) or entry.name.endswith(SIDECAR):
				continue
			
			if entry.is_dir():
				if any(os.scandir(entry.path)):
					entries.append(Entry(entry.name, True, None))
				
				continue
			
			record = self._load(path / entry.name)
			
			if record is not None:
				entries.append(Entry(entry.name, False, record))
		
		return entries
	
	def _stage(self, content:Iterable[bytes]) -> Staged:
		handle = NamedTemporaryFile(dir=self._temporary, delete=False)
		
		try:
			with handle:
				size, digest = self._hash(content, handle.write)
				handle.flush()
				os.fsync(handle.fileno())
		
		except BaseException:
			os.unlink(handle.name)
			raise
		
		return Staged(size, digest, handle.name)
	
	def _commit(self, path:VirtualPath, staged:Staged, record:ObjectRecord) -> None:
		file = self._file(path)
		file.parent.mkdir(parents=True, exist_ok=True)
		
		with NamedTemporaryFile('w', encoding='utf-8', dir=self._temporary, delete=False) as meta:
			json.dump(record.meta(), meta)
		
		os.replace(staged.handle, file)
		os.replace(meta.name, self._sidecar(path))
	
	def _discard(self, staged:Staged) -> None:
		try:
			os.unlink(staged.handle)
		except FileNotFoundError:
			pass
	
	def _open(self, path:VirtualPath, record:ObjectRecord) -> BinaryIO:
		return self._file(path).open('rb')
	
	def _read(self, snapshot:BinaryIO, start:int, end:int) -> Iterator[bytes]:
		with snapshot:
			snapshot.seek(start)
			remaining = end - start
			
			while remaining:
				chunk = snapshot.read(min(CHUNK, remaining))
				
				if not chunk:
					raise TpcError(Kind.REMOTE_FAILURE, f"Stored object truncated: {snapshot.name}")
				
				remaining -= len(chunk)
				yield chunk
	
	def _remove(self, path:VirtualPath, record:ObjectRecord) -> None:
		self._sidecar(path).unlink()
		self._file(path).unlink()
		
		parent = self._file(path).parent
		
		while parent != self.root and not any(parent.iterdir()):  # Containers are implicit.
			parent.rmdir()
			parent = parent.parent
