"""Copy jobs: their lifecycle, their progress, and admission to a bounded pool of workers."""

from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from threading import Event, Lock
from time import time
from typing import Callable, Dict, List, Mapping, Optional

from ..exc import Kind, TpcError
from ..marker import CREATED, PerfMarker, Terminal
from ..path import VirtualPath
from ..protocol import TransferMode
from ..util import KeyIdentifier


log = __import__('logging').getLogger(__name__)


class State(Enum):
	PENDING = 'PENDING'
	RUNNING = 'RUNNING'
	SUCCEEDED = 'SUCCEEDED'
	FAILED = 'FAILED'
	CANCELLED = 'CANCELLED'
	
	def __str__(self) -> str:
		return self.value
	
	@property
	def final(self) -> bool:
		return self in FINAL


FINAL = frozenset({State.SUCCEEDED, State.FAILED, State.CANCELLED})

_TRANSITIONS = {
		State.PENDING: {State.RUNNING},
		State.RUNNING: FINAL,
	}


class CopyJob:
	"""One COPY request being served: the local object, the remote URL, and the progress of each stripe."""
	
	def __init__(self, mode:TransferMode, local_path:VirtualPath, remote_url:str, *,
			forwarded:Optional[Mapping[str, str]]=None, streams:int=1, overwrite:bool=False) -> None:
		self.id = str(KeyIdentifier())
		self.mode = mode
		self.local_path = local_path
		self.remote_url = remote_url
		self.forwarded = dict(forwarded or {})  # Headers to present to the passive endpoint.
		self.streams = streams
		self.overwrite = overwrite
		
		self.state = State.PENDING
		self.error: Optional[TpcError] = None
		self.created_at = time()
		self.started_at: Optional[float] = None
		self.finished_at: Optional[float] = None
		
		self._lock = Lock()
		self._progress: List[int] = [0]
		self._cancelled = Event()
		self._finished = Event()
	
	def __repr__(self) -> str:
		return f"CopyJob({self.id}, {self.mode}, {self.local_path}, {self.remote_url!r}, {self.state})"
	
	@property
	def forwarded_authorization(self) -> Optional[str]:
		return self.forwarded.get('Authorization')
	
	# Lifecycle.
	
	def transition(self, state:State, error:Optional[TpcError]=None) -> None:
		with self._lock:
			if state not in _TRANSITIONS.get(self.state, ()):
				raise TpcError(Kind.CONFLICT, f"Copy job {self.id} may not move from {self.state} to {state}.")
			
			self.state = state
			self.error = error
			
			if state is State.RUNNING:
				self.started_at = time()
			else:
				self.finished_at = time()
		
		if state.final:
			self._finished.set()
	
	def cancel(self) -> None:
		if not self._cancelled.is_set():
			log.warning(f"Cancelling copy job {self.id}.", extra=dict(job=self.id, state=str(self.state)))
		
		self._cancelled.set()
	
	@property
	def cancelled(self) -> bool:
		return self._cancelled.is_set()
	
	def check(self) -> None:
		"""Raise if cancellation was requested; workers call this between units of work."""
		
		if self._cancelled.is_set():
			raise TpcError(Kind.CANCELLED, "The transfer was cancelled by the client.")
	
	def wait(self, timeout:Optional[float]=None) -> bool:
		"""Wait for a final state, returning whether it was reached."""
		return self._finished.wait(timeout)
	
	# Progress.
	
	def begin(self, stripes:int) -> None:
		with self._lock:
			self._progress = [0] * stripes
	
	def advance(self, stripe:int, count:int) -> None:
		with self._lock:
			self._progress[stripe] += count
	
	@property
	def progress(self) -> List[int]:
		with self._lock:
			return list(self._progress)
	
	@property
	def bytes_done(self) -> int:
		return sum(self.progress)
	
	def markers(self, now:Optional[float]=None) -> List[PerfMarker]:
		now = int(time() if now is None else now)
		progress = self.progress
		total = len(progress)
		
		return [PerfMarker(now, index, done, total) for index, done in enumerate(progress)]
	
	@property
	def terminal(self) -> Terminal:
		if self.state is State.SUCCEEDED:
			return CREATED
		
		if self.state is State.CANCELLED:
			return Terminal.failed(self.error or TpcError(Kind.CANCELLED, "The transfer was cancelled."))
		
		if self.state is State.FAILED:
			return Terminal.failed(self.error)
		
		raise TpcError(Kind.CONFLICT, f"Copy job {self.id} has not finished.")
	
	def as_dict(self) -> dict:
		progress = self.progress
		
		return {
				'id': self.id,
				'mode': str(self.mode),
				'local_path': str(self.local_path),
				'remote_url': self.remote_url,
				'state': str(self.state),
				'reason': self.error.reason if self.error else None,
				'stripe_bytes': progress,
				'stripe_count': len(progress),
				'bytes_done': sum(progress),
				'created_at': self.created_at,
				'started_at': self.started_at,
				'finished_at': self.finished_at,
			}


class JobManager:
	"""Admits copy jobs to at most `limit` concurrently running workers, queueing the rest first-in first-out."""
	
	def __init__(self, limit:int, retain:int=1024) -> None:
		self.limit = limit
		self.retain = retain
		self.peak = 0  # Highest number of simultaneously running jobs observed.
		
		self._pool = ThreadPoolExecutor(limit, thread_name_prefix='tpc-copy')
		self._lock = Lock()
		self._jobs: Dict[str, CopyJob] = OrderedDict()
		self._running = 0
	
	def __repr__(self) -> str:
		return f"JobManager(limit={self.limit}, running={self._running}, known={len(self._jobs)})"
	
	@property
	def running(self) -> int:
		return self._running
	
	@property
	def jobs(self) -> List[CopyJob]:
		with self._lock:
			return list(self._jobs.values())
	
	def get(self, identifier:str) -> Optional[CopyJob]:
		return self._jobs.get(identifier)
	
	def submit(self, job:CopyJob, work:Callable[[CopyJob], None]) -> CopyJob:
		with self._lock:
			self._jobs[job.id] = job
			self._forget()
		
		log.info(f"Admitted copy job {job.id}.", extra=dict(job=job.id, mode=str(job.mode), path=str(job.local_path),
				remote=job.remote_url))
		
		self._pool.submit(self._run, job, work)
		
		return job
	
	def shutdown(self) -> None:
		for job in self.jobs:
			job.cancel()
		
		self._pool.shutdown(wait=True)
	
	def _forget(self) -> None:
		while len(self._jobs) > self.retain:
			oldest = next(iter(self._jobs.values()))
			
			if not oldest.state.final:
				break
			
			self._jobs.pop(oldest.id)
	
	def _run(self, job:CopyJob, work:Callable[[CopyJob], None]) -> None:
		with self._lock:
			self._running += 1
			self.peak = max(self.peak, self._running)
		
		try:
			job.transition(State.RUNNING)
			
			try:
				job.check()
				work(job)
			
			except TpcError as e:
				if e.kind is Kind.CANCELLED or job.cancelled:
					job.transition(State.CANCELLED, e)
				else:
					job.transition(State.FAILED, e)
			
			except Exception as e:
				log.exception(f"Copy job {job.id} crashed.", extra=dict(job=job.id))
				job.transition(State.FAILED, TpcError(Kind.REMOTE_FAILURE, f"Internal error: {e}"))
			
			else:
				job.transition(State.SUCCEEDED)
		
		finally:
			with self._lock:
				self._running -= 1
		
		level = log.info if job.state is State.SUCCEEDED else log.error
		level(f"Copy job {job.id} finished: {job.state}.", extra=dict(job=job.id, state=str(job.state),
				reason=job.error.reason if job.error else None, bytes=job.bytes_done,
				duration=(job.finished_at or 0) - (job.started_at or 0)))
