"""Smoke tests: a small, complete exercise of one endpoint.

Each step passes or fails on its own; a step whose prerequisites did not pass is skipped rather than attempted.
"""

from hashlib import sha256
from time import monotonic
from typing import Callable, Dict, List, Optional, Sequence

from ..client import Orchestrator, Preference, TransferSpec
from ..exc import Kind, TpcError
from ..path import join_url, normalize_path
from ..scope import Activity, Scope
from ..util import KeyIdentifier
from .dataset import MiB, content
from .mesh import Member
from .report import Status, envelope


log = __import__('logging').getLogger(__name__)


class Smoke:
	"""One smoke run against `target`, using `peer` as the other party of its copies."""
	
	def __init__(self, target:Member, peer:Optional[Member], orchestrator:Orchestrator, *, size:int=MiB,
			seed:int=0) -> None:
		self.target = target
		self.peer = peer
		self.orchestrator = orchestrator
		self.size = size
		self.seed = seed
		
		self.run = str(KeyIdentifier())
		self.prefix = normalize_path(f'/smoke/{self.run}')
		self.content = content(seed, 0, size)
		self.tokens: Dict[Activity, str] = {}
		self.steps: List[dict] = []
		self._status: Dict[str, Status] = {}
	
	def __repr__(self) -> str:
		return f"Smoke({self.target.url!r}, run={self.run})"
	
	def url(self, member:Member, name:str) -> str:
		return join_url(member.url, self.prefix / name)
	
	def step(self, name:str, needs:Sequence[str], action:Callable[[], Optional[str]]) -> Status:
		started = monotonic()
		missing = [need for need in needs if self._status.get(need) is not Status.PASS]
		
		if missing:
			status, detail = Status.SKIPPED, f"Requires {', '.join(missing)}."
		
		else:
			try:
				detail = action()
				status = Status.PASS
			
			except TpcError as e:
				status, detail = Status.FAIL, e.reason
			
			except Exception as e:
				log.exception(f"Smoke step {name} crashed.", extra=dict(step=name, target=self.target.url))
				status, detail = Status.FAIL, f"{e.__class__.__name__}: {e}"
		
		self._status[name] = status
		self.steps.append({'name': name, 'status': str(status), 'duration': monotonic() - started, 'detail': detail})
		
		level = log.info if status is Status.PASS else log.warning
		level(f"Smoke step {name}: {status}.", extra=dict(step=name, status=str(status), detail=detail))
		
		return status
	
	def __call__(self) -> dict:
		started = monotonic()
		token_steps = [f'token:{activity}' for activity in Activity]
		
		self.step('discovery', (), self.discovery)
		
		for activity in Activity:
			self.step(f'token:{activity}', (), lambda activity=activity: self.token(activity))
		
		self.step('upload', ('token:UPLOAD', ), self.upload)
		self.step('ranged-download', ('upload', 'token:DOWNLOAD'), self.ranged_download)
		self.step('pull-copy', token_steps, self.pull)
		self.step('push-copy', ['upload'] + token_steps, self.push)
		self.step('delete', ('upload', 'token:DELETE', 'token:DOWNLOAD'), self.delete)
		
		return envelope('smoke',
				endpoint = self.target.url,
				peer = self.peer.url if self.peer else None,
				passed = all(step['status'] == 'PASS' for step in self.steps),
				duration = monotonic() - started,
				steps = self.steps,
			)
	
	# Steps.
	
	def discovery(self) -> str:
		document = self.orchestrator.discover(self.target.url)
		return f"Token endpoint {document['token_endpoint']}."
	
	def token(self, activity:Activity) -> str:
		self.tokens[activity] = self.orchestrator.acquire_token(self.target.url, [Scope(activity, self.prefix)],
				self.target.credential)
		return f"Granted {activity}:{self.prefix}."
	
	def upload(self) -> str:
		stored = self.orchestrator.upload(self.url(self.target, 'object'), self.content, self.tokens[Activity.UPLOAD])
		
		if stored.sha256 != sha256(self.content).hexdigest():
			raise TpcError(Kind.REMOTE_FAILURE, "Uploaded digest does not match the content sent.")
		
		return f"Stored {stored.size} bytes."
	
	def ranged_download(self) -> str:
		start, end = self.size // 4, self.size // 2 + 1
		fetched = self.orchestrator.download(self.url(self.target, 'object'), None, self.tokens[Activity.DOWNLOAD],
				range=(start, end))
		
		if fetched.sha256 != sha256(self.content[start:end]).hexdigest():
			raise TpcError(Kind.REMOTE_FAILURE, f"Bytes [{start}, {end}) differ from those uploaded.")
		
		return f"Fetched bytes [{start}, {end})."
	
	def _peer(self) -> Member:
		if self.peer is None:
			raise TpcError(Kind.BAD_REQUEST, "No peer endpoint to copy with.")
		
		return self.peer
	
	def _copy(self, spec:TransferSpec) -> str:
		report = self.orchestrator.third_party_copy(spec)
		
		if not report.succeeded:
			raise report.error
		
		return f"{report.mode} copy of {report.bytes} bytes in {report.attempts} attempt(s)."
	
	def pull(self) -> str:
		peer = self._peer()
		original = self.url(peer, 'original')
		token = self.orchestrator.acquire_token(peer.url, [Scope(Activity.UPLOAD, self.prefix)], peer.credential)
		self.orchestrator.upload(original, content(self.seed, 1, self.size), token)
		
		return self._copy(TransferSpec(original, self.url(self.target, 'pulled'), Preference.PULL))
	
	def push(self) -> str:
		return self._copy(TransferSpec(self.url(self.target, 'object'), self.url(self._peer(), 'pushed'),
				Preference.PUSH))
	
	def delete(self) -> str:
		url = self.url(self.target, 'object')
		self.orchestrator.delete(url, self.tokens[Activity.DELETE])
		
		try:
			self.orchestrator.stat(url, self.tokens[Activity.DOWNLOAD])
		except TpcError as e:
			if e.kind is not Kind.NOT_FOUND:
				raise
		else:
			raise TpcError(Kind.CONFLICT, f"{url} still exists after deletion.")
		
		if self._status.get('pull-copy') is Status.PASS:
			self.orchestrator.delete(self.url(self.target, 'pulled'), self.tokens[Activity.DELETE])
		
		return "Deleted."


def cmd_smoke(target:Member, peer:Optional[Member], orchestrator:Orchestrator, *, size:int=MiB, seed:int=0) -> dict:
	"""Run the smoke steps against `target`; never raises for a failing step."""
	return Smoke(target, peer, orchestrator, size=size, seed=seed)()
