from random import Random
from threading import Lock
from time import monotonic, sleep
from typing import Iterable, Iterator, Optional

from .config import FaultConfig


log = __import__('logging').getLogger(__name__)


class FaultInjector:
	"""Apply a `FaultConfig` to requests and response bodies. Draws are reproducible for a given seed and order."""
	
	def __init__(self, config:FaultConfig) -> None:
		self.config = config
		self._random = Random(config.seed)
		self._lock = Lock()
	
	def __repr__(self) -> str:
		return f"FaultInjector({self.config!r})"
	
	def error(self, method:str) -> Optional[int]:
		"""The status to answer a request with instead of serving it, if this request is to fail."""
		
		config = self.config
		
		if not config.error_rate or method.upper() not in config.verbs:
			return None
		
		with self._lock:
			draw = self._random.random()
		
		if draw >= config.error_rate:
			return None
		
		log.warning(f"Injecting {config.error_status} into {method}.", extra=dict(method=method,
				status=config.error_status))
		
		return config.error_status
	
	def body(self, chunks:Iterable[bytes]) -> Iterator[bytes]:
		"""Wrap a GET body in the configured stall and rate limit."""
		
		config = self.config
		
		if config.stall:
			log.warning(f"Stalling response body for {config.stall} seconds.", extra=dict(stall=config.stall))
			sleep(config.stall)
		
		if not config.rate_limit:
			yield from chunks
			return
		
		started = monotonic()
		sent = 0
		
		for chunk in chunks:
			# Paced in 16 KiB pieces.
			for offset in range(0, len(chunk), 16 * 1024):
				piece = chunk[offset:offset + 16 * 1024]
				sent += len(piece)
				ahead = sent / config.rate_limit - (monotonic() - started)
				
				if ahead > 0:
					sleep(ahead)
				
				yield piece
