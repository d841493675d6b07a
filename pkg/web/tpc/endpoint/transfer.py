"""The active side of a third-party copy: pulling a remote object into the store, or pushing one out of it."""

from base64 import b64decode
from binascii import Error as DecodingError
from concurrent.futures import FIRST_EXCEPTION, ThreadPoolExecutor, wait
from hashlib import sha256
from re import compile as re
from tempfile import SpooledTemporaryFile
from threading import Event
from typing import Iterator, List, Mapping, Optional, Tuple

from ..exc import Kind, TpcError
from ..http import Transport, check, timed_out
from ..store import ObjectRecord, Store
from .job import CopyJob


log = __import__('logging').getLogger(__name__)

CHUNK = 64 * 1024
SPOOL = 8 * 1024 * 1024  # Stripe bytes held in memory before spilling to disk.

_CONTENT_RANGE = re(r'bytes ([0-9]+)-([0-9]+)/([0-9]+|\*)')


def parse_digest(header:Optional[str]) -> Optional[str]:
	"""The hexadecimal SHA-256 named by an RFC 3230 `Digest` header, if it names one."""
	
	for part in (header or '').split(','):
		algorithm, _, value = part.strip().partition('=')
		
		if algorithm.strip().lower() != 'sha-256':
			continue
		
		try:
			raw = b64decode(value.strip(), validate=True)
		except (DecodingError, ValueError):
			return None
		
		return raw.hex() if len(raw) == 32 else None
	
	return None


def partition(size:int, streams:int) -> List[Tuple[int, int]]:
	"""Contiguous half-open ranges covering [0, size), as equal as integer division allows."""
	return [(size * i // streams, size * (i + 1) // streams) for i in range(streams)]


def stripes(size:Optional[int], ranged:bool, streams:int, minimum:int) -> List[Optional[Tuple[int, int]]]:
	"""Decide how a remote object will be fetched; `None` stands for a single unranged GET."""
	
	if not ranged or size is None or streams < 2 or size < streams * minimum:
		return [None]
	
	return partition(size, streams)


def _fetch(job:CopyJob, transport:Transport, headers:Mapping[str, str], index:int,
		interval:Optional[Tuple[int, int]], spool, timeout:float, abort:Event) -> int:
	headers = dict(headers)
	
	if interval is not None:
		headers['Range'] = f"bytes={interval[0]}-{interval[1] - 1}"
	
	response = transport.request('GET', job.remote_url, headers=headers, stream=True, timeout=timeout)
	
	try:
		if interval is None:
			check(response, 200, remote=True)
		
		else:
			check(response, 206, remote=True)
			match = _CONTENT_RANGE.fullmatch(response.headers.get('Content-Range', ''))
			
			if not match or (int(match.group(1)), int(match.group(2)) + 1) != interval:
				raise TpcError(Kind.PROTOCOL_VIOLATION, f"Remote answered the wrong range for stripe {index}: "
						f"{response.headers.get('Content-Range')!r}")
		
		received = 0
		
		try:
			for chunk in response.iter_content(CHUNK):
				job.check()
				
				if abort.is_set():
					raise TpcError(Kind.CANCELLED, f"Stripe {index} abandoned after another stripe failed.")
				
				spool.write(chunk)
				received += len(chunk)
				job.advance(index, len(chunk))
		
		except TpcError:
			raise
		
		except Exception as e:
			if timed_out(e):
				raise TpcError(Kind.TIMEOUT, f"Remote made no progress within {timeout} seconds on stripe {index}.")
			
			raise TpcError(Kind.REMOTE_FAILURE, f"Transfer of stripe {index} interrupted: {e}")
		
		if interval is not None and received != interval[1] - interval[0]:
			raise TpcError(Kind.REMOTE_FAILURE, f"Stripe {index} ended after {received} of "
					f"{interval[1] - interval[0]} bytes.")
		
		if __debug__:
			log.debug(f"Fetched stripe {index} of copy job {job.id}.", extra=dict(job=job.id, stripe=index,
					bytes=received))
		
		return received
	
	finally:
		response.close()


def _drain(spools) -> Iterator[bytes]:
	for spool in spools:
		spool.seek(0)
		
		while True:
			chunk = spool.read(CHUNK)
			
			if not chunk:
				break
			
			yield chunk


def execute_pull(job:CopyJob, store:Store, transport:Transport, *, min_stripe_bytes:int,
		remote_timeout:float) -> ObjectRecord:
	"""Fetch the remote object, in parallel ranges where possible, and commit it to the store atomically."""
	
	headers = dict(job.forwarded)
	head = transport.request('HEAD', job.remote_url, headers=headers, timeout=remote_timeout)
	check(head, 200, remote=True)
	head.close()
	
	length = head.headers.get('Content-Length')
	size = int(length) if length and length.isdigit() else None
	ranged = 'bytes' in head.headers.get('Accept-Ranges', '').lower()
	expected = parse_digest(head.headers.get('Digest'))
	plan = stripes(size, ranged, job.streams, min_stripe_bytes)
	
	job.begin(len(plan))
	
	log.info(f"Pulling {job.remote_url} in {len(plan)} stripe(s).", extra=dict(job=job.id, size=size,
			stripes=len(plan), ranged=ranged))
	
	spools = [SpooledTemporaryFile(SPOOL) for _ in plan]
	abort = Event()
	
	try:
		with ThreadPoolExecutor(len(plan), thread_name_prefix=f'tpc-stripe-{job.id[-6:]}') as pool:
			futures = [pool.submit(_fetch, job, transport, headers, i, interval, spools[i], remote_timeout, abort)
					for i, interval in enumerate(plan)]
			
			done, _ = wait(futures, return_when=FIRST_EXCEPTION)
			
			for future in done:
				if future.exception() is not None:
					abort.set()
					break
			
			wait(futures)
		
		errors = [f.exception() for f in futures if f.exception() is not None]
		
		if errors:
			job.check()
			raise next((e for e in errors if not isinstance(e, TpcError) or e.kind is not Kind.CANCELLED), errors[0])
		
		received = sum(f.result() for f in futures)
		
		if size is not None and received != size:
			raise TpcError(Kind.REMOTE_FAILURE, f"Received {received} bytes; remote announced {size}.")
		
		if expected:
			digest = sha256()
			
			for chunk in _drain(spools):
				digest.update(chunk)
			
			if digest.hexdigest() != expected:
				raise TpcError(Kind.REMOTE_FAILURE, f"Digest mismatch: remote announced sha-256 {expected}, "
						f"received {digest.hexdigest()}.")
		
		job.check()
		
		return store.put(job.local_path, _drain(spools), overwrite=job.overwrite)
	
	finally:
		for spool in spools:
			spool.close()


class _Upload:
	"""A re-iterable request body streaming one generation of a stored object, with a known length."""
	
	def __init__(self, job:CopyJob, store:Store, record:ObjectRecord) -> None:
		self.job = job
		self.store = store
		self.record = record
	
	def __len__(self) -> int:
		return self.record.size
	
	def __iter__(self) -> Iterator[bytes]:
		chunks, record = self.store.get(self.job.local_path)
		
		if record.generation != self.record.generation:
			raise TpcError(Kind.CONFLICT, f"{self.job.local_path} was replaced during the transfer.")
		
		sent = 0
		
		for chunk in chunks:
			self.job.check()
			sent += len(chunk)
			
			ahead = sent - self.job.bytes_done  # A body replayed after a redirect only reports new ground.
			
			if ahead > 0:
				self.job.advance(0, ahead)
			
			yield chunk


def execute_push(job:CopyJob, store:Store, transport:Transport, *, remote_timeout:float) -> ObjectRecord:
	"""PUT the local object to the remote URL in a single stream."""
	
	record = store.stat(job.local_path)
	headers = dict(job.forwarded)
	headers.setdefault('Content-Type', 'application/octet-stream')
	headers['Want-Digest'] = 'sha-256'
	
	log.info(f"Pushing {job.local_path} to {job.remote_url}.", extra=dict(job=job.id, size=record.size))
	
	job.begin(1)
	
	response = transport.request('PUT', job.remote_url, headers=headers, data=_Upload(job, store, record),
			timeout=remote_timeout)
	
	check(response, 200, 201, 204, remote=True)
	response.close()
	
	announced = parse_digest(response.headers.get('Digest'))
	
	if announced and announced != record.sha256:
		raise TpcError(Kind.REMOTE_FAILURE, f"Digest mismatch: remote stored sha-256 {announced}, "
				f"sent {record.sha256}.")
	
	if job.bytes_done != record.size:
		raise TpcError(Kind.REMOTE_FAILURE, f"Sent {job.bytes_done} of {record.size} bytes.")
	
	return record
