"""The third party: an orchestrator that has two endpoints move data directly between themselves.

	orchestrator = Orchestrator(Credential('mover', 'secret'), verify='authority.pem')
	report = orchestrator.third_party_copy(TransferSpec(
			'https://a.example:8443/data/f',
			'https://b.example:8443/data/f',
		))

Tokens are acquired from each endpoint's own token service, discovered through its metadata document. The COPY is
sent to the active endpoint bearing that endpoint's token, with the passive endpoint's token forwarded in
`TransferHeaderAuthorization`; neither token is ever presented to the other party as its own credential.
"""

from dataclasses import dataclass, field
from enum import Enum
from hashlib import sha256
from operator import attrgetter
from random import Random
from threading import Lock
from time import monotonic, sleep
from typing import BinaryIO, Callable, Dict, Iterable, List, Mapping, NamedTuple, Optional, Union

from cachetools import TTLCache, cachedmethod
from requests.exceptions import RequestException

from .exc import TRANSIENT, Kind, TpcError
from .http import Transport, Verify, check, timed_out
from .marker import MarkerParser, PerfMarker
from .path import split_url
from .protocol import DISCOVERY_PATH, MAX_STREAMS, OVERWRITE, STREAMS, TRANSFER_HEADER, TransferMode
from .scope import Activity, Scope
from .endpoint.transfer import parse_digest


log = __import__('logging').getLogger(__name__)

CHUNK = 64 * 1024
FALLBACK = frozenset({405, 501})  # Statuses from an active endpoint meaning it does not perform COPY.


class Preference(Enum):
	AUTO = 'AUTO'
	PULL = 'PULL'
	PUSH = 'PUSH'
	
	def __str__(self) -> str:
		return self.value
	
	@property
	def modes(self) -> List[TransferMode]:
		"""The modes to try, in order."""
		
		if self is Preference.AUTO:
			return [TransferMode.PULL, TransferMode.PUSH]
		
		return [TransferMode(self.value)]


class Outcome(Enum):
	SUCCEEDED = 'SUCCEEDED'
	FAILED = 'FAILED'
	
	def __str__(self) -> str:
		return self.value


class Credential(NamedTuple):
	"""How to authenticate to a token service: a client identifier and secret, or a client certificate."""
	
	client_id: Optional[str] = None
	secret: Optional[str] = None
	certificate: Optional[str] = None
	private_key: Optional[str] = None


class Digested(NamedTuple):
	sha256: str
	size: int
	url: str  # Where the bytes were finally found, after redirection.


@dataclass(frozen=True)
class TransferSpec:
	source_url: str
	destination_url: str
	preferred_mode: Preference = Preference.AUTO
	streams: Optional[int] = None
	progress_timeout: float = 30.0  # Seconds without stripe byte progress before the transfer is abandoned.
	overwrite: bool = False
	attempt_budget: int = 3
	
	def __post_init__(self):
		if self.attempt_budget < 1:
			raise TpcError(Kind.BAD_REQUEST, "The attempt budget must allow at least one attempt.")
		
		if self.progress_timeout <= 0:
			raise TpcError(Kind.BAD_REQUEST, "The progress timeout must be positive.")
		
		if self.streams is not None and not 1 <= self.streams <= MAX_STREAMS:
			raise TpcError(Kind.BAD_REQUEST, f"Streams must lie within [1, {MAX_STREAMS}].")
		
		split_url(self.source_url)
		split_url(self.destination_url)
	
	def as_dict(self) -> dict:
		return {
				'source_url': self.source_url,
				'destination_url': self.destination_url,
				'preferred_mode': str(self.preferred_mode),
				'streams': self.streams,
				'progress_timeout': self.progress_timeout,
				'overwrite': self.overwrite,
				'attempt_budget': self.attempt_budget,
			}


@dataclass
class TransferReport:
	spec: TransferSpec
	mode: Optional[TransferMode] = None
	active: Optional[str] = None  # Base URL of the endpoint the final COPY was sent to.
	attempts: int = 0
	outcome: Outcome = Outcome.FAILED
	error: Optional[TpcError] = None
	bytes: int = 0
	duration: float = 0.0
	markers: List[PerfMarker] = field(default_factory=list)
	source_digest: Optional[str] = None
	destination_digest: Optional[str] = None
	retries: List[str] = field(default_factory=list)  # The reason each retried attempt failed.
	
	@property
	def succeeded(self) -> bool:
		return self.outcome is Outcome.SUCCEEDED
	
	def as_dict(self) -> dict:
		return {
				'spec': self.spec.as_dict(),
				'mode': str(self.mode) if self.mode else None,
				'active': self.active,
				'attempts': self.attempts,
				'outcome': str(self.outcome),
				'error': self.error.as_dict() if self.error else None,
				'bytes': self.bytes,
				'duration': self.duration,
				'markers': [marker.as_dict() for marker in self.markers],
				'source_digest': self.source_digest,
				'destination_digest': self.destination_digest,
				'retries': list(self.retries),
			}


class Backoff:
	"""Exponential backoff with jitter: the delay before retry `n` lies in [d/2, d] for d = min(cap, base × factor^(n-1))."""
	
	def __init__(self, base:float=1.0, factor:float=2.0, cap:float=30.0, seed:Optional[int]=None) -> None:
		self.base = base
		self.factor = factor
		self.cap = cap
		self._random = Random(seed)
		self._lock = Lock()
	
	def __repr__(self) -> str:
		return f"Backoff(base={self.base}, factor={self.factor}, cap={self.cap})"
	
	def ceiling(self, retry:int) -> float:
		return min(self.cap, self.base * self.factor ** (retry - 1))
	
	def delay(self, retry:int) -> float:
		ceiling = self.ceiling(retry)
		
		with self._lock:
			return ceiling / 2 + self._random.random() * ceiling / 2


def _bearer(token:str) -> str:
	return 'Bearer ' + token


class Orchestrator:
	"""Acquires tokens, drives COPY requests, and moves bytes directly when asked to.

	`credentials` is either one `Credential` used everywhere, or a mapping of endpoint base URL to `Credential`. The
	orchestrator is reentrant; concurrent transfers share only its connection pools and discovery cache.
	"""
	
	DISCOVERY_ENTRIES: int = 128
	DISCOVERY_TTL: int = 5 * 60
	
	def __init__(self, credentials:Union[Credential, Mapping[str, Credential]], *, verify:Verify=True,
			transport:Optional[Transport]=None, backoff:Optional[Backoff]=None,
			sleep:Callable[[float], None]=sleep, timeout:float=60.0) -> None:
		self.credentials = credentials
		self.verify = verify
		self.timeout = timeout
		self.transport = transport or Transport(verify=verify, timeout=timeout, user_agent='web.tpc orchestrator')
		self.backoff = backoff or Backoff()
		
		self._sleep = sleep
		self._discovered = TTLCache(self.DISCOVERY_ENTRIES, self.DISCOVERY_TTL)
		self._lock = Lock()
		self._certified: Dict[str, Transport] = {}
	
	def __repr__(self) -> str:
		return f"Orchestrator({self.transport!r}, {self.backoff!r})"
	
	def credential(self, base:str) -> Credential:
		if isinstance(self.credentials, Credential):
			return self.credentials
		
		base = base.rstrip('/')
		
		if base not in self.credentials:
			raise TpcError(Kind.UNAUTHORIZED, f"No credential configured for {base}.")
		
		return self.credentials[base]
	
	# Tokens.
	
	@cachedmethod(attrgetter('_discovered'), lock=attrgetter('_lock'))
	def discover(self, base:str) -> dict:
		"""Retrieve, and cache, the authorization server metadata of an endpoint."""
		
		response = self.transport.request('GET', base.rstrip('/') + DISCOVERY_PATH)
		
		if response.status_code == 404:
			response.close()
			raise TpcError(Kind.PROTOCOL_VIOLATION, f"{base} publishes no authorization server metadata.", 404)
		
		check(response, 200)
		
		try:
			document = response.json()
		except ValueError:
			raise TpcError(Kind.PROTOCOL_VIOLATION, f"Authorization server metadata from {base} is not JSON.")
		
		if not isinstance(document, dict) or not isinstance(document.get('token_endpoint'), str):
			raise TpcError(Kind.PROTOCOL_VIOLATION, f"Authorization server metadata from {base} lacks a token endpoint.")
		
		return document
	
	def acquire_token(self, base:str, scopes:Iterable[Scope], credential:Optional[Credential]=None,
			audience:Optional[str]=None, lifetime:Optional[int]=None) -> str:
		"""Exchange client credentials for a bearer token carrying exactly `scopes`."""
		
		credential = credential or self.credential(base)
		endpoint = self.discover(base)['token_endpoint']
		form = {'grant_type': 'client_credentials', 'scope': ' '.join(str(scope) for scope in scopes)}
		transport = self.transport
		auth = None
		
		if audience:
			form['audience'] = audience
		
		if lifetime:
			form['expires_in'] = str(lifetime)
		
		if credential.secret is not None:
			auth = (credential.client_id, credential.secret)
		
		elif credential.certificate:
			transport = self._certified_transport(credential)
		
		else:
			raise TpcError(Kind.UNAUTHORIZED, "The credential carries neither a secret nor a certificate.")
		
		try:
			response = transport.session.post(endpoint, data=form, auth=auth, timeout=self.timeout)
		except RequestException as e:
			raise TpcError(Kind.REMOTE_FAILURE, f"Token request to {endpoint} failed: {e}")
		
		check(response, 200)
		
		try:
			token = response.json()['access_token']
		except (ValueError, KeyError, TypeError):
			raise TpcError(Kind.PROTOCOL_VIOLATION, f"Token response from {endpoint} carries no access token.")
		
		if __debug__:
			log.debug(f"Acquired token from {base}.", extra=dict(endpoint=endpoint, scopes=form['scope']))
		
		return token
	
	def _certified_transport(self, credential:Credential) -> Transport:
		with self._lock:
			key = credential.certificate
			
			if key not in self._certified:
				self._certified[key] = Transport(verify=self.verify, timeout=self.timeout,
						cert=(credential.certificate, credential.private_key))
			
			return self._certified[key]
	
	# Third party copy.
	
	def third_party_copy(self, spec:TransferSpec) -> TransferReport:
		"""Have the endpoints copy `spec.source_url` to `spec.destination_url` directly, and report how it went."""
		
		report = TransferReport(spec)
		started = monotonic()
		
		try:
			self._transfer(spec, report)
			report.outcome = Outcome.SUCCEEDED
			report.error = None
		
		except TpcError as e:
			report.outcome = Outcome.FAILED
			report.error = e
		
		report.duration = monotonic() - started
		
		level = log.info if report.succeeded else log.error
		level(f"Transfer {report.outcome}: {spec.source_url} to {spec.destination_url}.", extra=dict(
				source = spec.source_url,
				destination = spec.destination_url,
				mode = str(report.mode),
				attempts = report.attempts,
				bytes = report.bytes,
				duration = report.duration,
				reason = report.error.reason if report.error else None,
			))
		
		return report
	
	def _transfer(self, spec:TransferSpec, report:TransferReport) -> None:
		source_base, source_path = split_url(spec.source_url)
		destination_base, destination_path = split_url(spec.destination_url)
		writing = Activity.MANAGE if spec.overwrite else Activity.UPLOAD
		
		tokens = {
				TransferMode.PULL: self.acquire_token(destination_base, [Scope.covering(writing, destination_path)]),
				TransferMode.PUSH: self.acquire_token(source_base, [Scope.covering(Activity.DOWNLOAD, source_path)]),
			}
		
		modes = spec.preferred_mode.modes
		
		while True:
			mode = modes[0]
			report.mode = mode
			report.active = destination_base if mode is TransferMode.PULL else source_base
			report.attempts += 1
			report.markers = []
			
			if mode is TransferMode.PULL:
				active_url, passive_url = spec.destination_url, spec.source_url
				active_token, passive_token = tokens[TransferMode.PULL], tokens[TransferMode.PUSH]
			else:
				active_url, passive_url = spec.source_url, spec.destination_url
				active_token, passive_token = tokens[TransferMode.PUSH], tokens[TransferMode.PULL]
			
			try:
				self._copy(spec, mode, active_url, passive_url, active_token, passive_token, report)
				break
			
			except TpcError as e:
				if e.remote_status in FALLBACK and len(modes) > 1:
					log.warning(f"{report.active} does not perform COPY; falling back to {modes[1]}.", extra=dict(
							active=report.active, status=e.remote_status))
					modes = modes[1:]
					
					if report.attempts < spec.attempt_budget:
						continue
					
					raise
				
				if e.kind not in TRANSIENT or e.remote_status in FALLBACK or report.attempts >= spec.attempt_budget:
					raise
				
				delay = self.backoff.delay(report.attempts)
				report.retries.append(e.reason)
				
				log.warning(f"Attempt {report.attempts} failed; retrying in {delay:.1f} seconds.", extra=dict(
						source = spec.source_url,
						destination = spec.destination_url,
						attempt = report.attempts,
						reason = e.reason,
						delay = delay,
					))
				
				self._sleep(delay)
		
		self._verify(spec, tokens[TransferMode.PUSH], tokens[TransferMode.PULL], report)
	
	def _copy(self, spec:TransferSpec, mode:TransferMode, active_url:str, passive_url:str, active_token:str,
			passive_token:str, report:TransferReport) -> None:
		headers = {
				'Authorization': _bearer(active_token),
				mode.header: passive_url,
				TRANSFER_HEADER + 'Authorization': _bearer(passive_token),
				OVERWRITE: 'T' if spec.overwrite else 'F',
			}
		
		if spec.streams:
			headers[STREAMS] = str(spec.streams)
		
		response = self.transport.request('COPY', active_url, headers=headers, stream=True,
				timeout=spec.progress_timeout)
		
		try:
			check(response, 202, 201)
			
			parser = MarkerParser()
			progress: Dict[int, int] = {}
			moved = monotonic()
			
			try:
				for chunk in response.iter_content(chunk_size=None):
					for item in parser.feed(chunk):
						if not isinstance(item, PerfMarker):
							continue
						
						report.markers.append(item)
						
						if item.stripe_bytes_transferred > progress.get(item.stripe_index, 0):
							moved = monotonic()
						
						progress[item.stripe_index] = item.stripe_bytes_transferred
					
					if parser.terminal is None and monotonic() - moved > spec.progress_timeout:
						raise TpcError(Kind.TIMEOUT, f"No progress from {active_url} within "
								f"{spec.progress_timeout} seconds; abandoning the transfer.")
			
			except RequestException as e:
				if timed_out(e):
					raise TpcError(Kind.TIMEOUT, f"{active_url} sent nothing within {spec.progress_timeout} seconds.")
				
				raise TpcError(Kind.REMOTE_FAILURE, f"COPY response from {active_url} interrupted: {e}")
			
			terminal = parser.close()
		
		finally:
			response.close()
		
		report.bytes = sum(progress.values())
		
		if not terminal.success:
			raise terminal.error
	
	def _verify(self, spec:TransferSpec, source_token:str, destination_token:str, report:TransferReport) -> None:
		source = self._stat(spec, spec.source_url, source_token)
		destination = self._stat(spec, spec.destination_url, destination_token)
		
		report.source_digest = parse_digest(source.get('Digest'))
		report.destination_digest = parse_digest(destination.get('Digest'))
		
		length = destination.get('Content-Length')
		
		if length and length.isdigit():
			report.bytes = int(length)
		
		if report.source_digest and report.destination_digest and report.source_digest != report.destination_digest:
			raise TpcError(Kind.REMOTE_FAILURE, f"Digest mismatch after transfer: source sha-256 "
					f"{report.source_digest}, destination sha-256 {report.destination_digest}.")
	
	def _stat(self, spec:TransferSpec, url:str, token:str) -> Mapping[str, str]:
		for attempt in range(1, spec.attempt_budget + 1):
			try:
				return self.stat(url, token)
			
			except TpcError as e:
				if e.kind not in TRANSIENT or attempt == spec.attempt_budget:
					raise
				
				self._sleep(self.backoff.delay(attempt))
	
	# Direct access.
	
	def stat(self, url:str, token:str) -> Mapping[str, str]:
		"""The response headers of a HEAD request."""
		
		response = self.transport.request('HEAD', url, headers={'Authorization': _bearer(token)})
		check(response, 200)
		response.close()
		
		return response.headers
	
	def download(self, url:str, sink:Optional[BinaryIO], token:str, range:Optional[tuple]=None) -> Digested:
		"""Retrieve an object, or the half-open byte `range` of one, writing it to `sink` if given."""
		
		headers = {'Authorization': _bearer(token)}
		
		if range:
			headers['Range'] = f"bytes={range[0]}-{range[1] - 1}"
		
		response = self.transport.request('GET', url, headers=headers, stream=True)
		
		try:
			check(response, 206 if range else 200)
			digest = sha256()
			size = 0
			
			try:
				for chunk in response.iter_content(CHUNK):
					digest.update(chunk)
					size += len(chunk)
					
					if sink is not None:
						sink.write(chunk)
			
			except RequestException as e:
				raise TpcError(Kind.REMOTE_FAILURE, f"Download of {url} interrupted: {e}")
			
			announced = parse_digest(response.headers.get('Digest'))
			
			if not range and announced and announced != digest.hexdigest():
				raise TpcError(Kind.REMOTE_FAILURE, f"Digest mismatch downloading {url}.")
			
			return Digested(digest.hexdigest(), size, response.url)
		
		finally:
			response.close()
	
	def upload(self, url:str, source:Union[bytes, BinaryIO, Iterable[bytes]], token:str,
			overwrite:bool=False) -> Digested:
		"""Store an object. Unless `overwrite` is set an existing object is left alone and CONFLICT raised."""
		
		headers = {'Authorization': _bearer(token), 'Want-Digest': 'sha-256',
				'Content-Type': 'application/octet-stream'}
		
		if not overwrite:
			headers['If-None-Match'] = '*'
		
		digest = sha256()
		size = 0
		
		if isinstance(source, (bytes, bytearray)):
			digest.update(source)
			size = len(source)
			data = bytes(source)
		
		else:
			if hasattr(source, 'read'):
				source = iter(lambda: source.read(CHUNK), b'')
			
			spooled = bytearray()
			
			for chunk in source:
				digest.update(chunk)
				spooled += chunk
			
			size = len(spooled)
			data = bytes(spooled)
		
		response = self.transport.request('PUT', url, headers=headers, data=data)
		check(response, 201, 204)
		response.close()
		
		announced = parse_digest(response.headers.get('Digest'))
		
		if announced and announced != digest.hexdigest():
			raise TpcError(Kind.REMOTE_FAILURE, f"Digest mismatch uploading {url}.")
		
		return Digested(digest.hexdigest(), size, response.url)
	
	def delete(self, url:str, token:str) -> None:
		response = self.transport.request('DELETE', url, headers={'Authorization': _bearer(token)})
		check(response, 204, 200)
		response.close()
