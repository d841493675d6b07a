"""ACL evaluation result, ACL abstractions, and the per-request authorization context predicates consult."""

from itertools import chain
from time import time
from typing import Dict, Optional

from webob import Request

from .path import VirtualPath
from .protocol import TransferMode
from .scope import Activity, Scope
from .token import Reason, Verdict, verify
from .util import Secret


log = __import__('logging').getLogger(__name__)


class ACLResult:
	__slots__ = ('result', 'predicate', 'source')
	
	def __init__(self, result, predicate, source=None):
		self.result = result
		self.predicate = predicate
		self.source = source
	
	def __bool__(self):
		return bool(self.result)
	
	def __repr__(self):
		return f"ACLResult({self.result!r}, {self.predicate!r}, source={self.source!r})"


class ACL(list):
	"""An ordered list of (predicate, source) rules followed by a base policy, evaluated first-vote-wins."""
	
	def __init__(self, *rules, context=None, policy=None, source=None):
		super().__init__((rule, source) for rule in rules)
		
		self.context = context
		self.policy = policy or ()
	
	@property
	def is_authorized(self) -> ACLResult:
		for predicate, source in self:
			result = predicate() if self.context is None else predicate(self.context)
			
			if __debug__:
				log.debug(f"{predicate!r} (from {source}) voted {result!r}")
			
			if result is None:
				continue
			
			return ACLResult(result, predicate, source)
		
		return ACLResult(None, None, None)
	
	def extend_from(self, handler, source=None):
		"""Collect the `__acl__` of a handler, honouring `__acl_inherit__`."""
		
		if not getattr(handler, '__acl_inherit__', True):
			del self[:]
		
		self.extend((rule, source) for rule in getattr(handler, '__acl__', ()))
	
	def __bool__(self):
		return bool(len(self) or len(self.policy))
	
	def __iter__(self):
		return chain(super().__iter__(), ((i, 'policy') for i in self.policy))
	
	def __repr__(self):
		return '[' + ', '.join(repr(i) for i, _ in self) + ']'


class RequestContext:
	"""What predicates know about a request: the path it addresses, its bearer token, and its transfer direction.

	Token verification is performed lazily, at most once per activity, and every verdict is retained.
	"""
	
	__slots__ = ('request', 'path', 'token', 'mode', 'verdicts', '_root_key', '_location', '_now')
	
	request: Request
	path: VirtualPath
	token: Optional[str]
	mode: Optional[TransferMode]
	verdicts: Dict[Activity, Verdict]
	
	def __init__(self, request:Request, path:VirtualPath, root_key:Secret, location:str,
			mode:Optional[TransferMode]=None, now:Optional[float]=None) -> None:
		self.request = request
		self.path = path
		self.token = bearer(request)
		self.mode = mode
		self.verdicts = {}
		
		self._root_key = root_key
		self._location = location
		self._now = now
	
	def verdict(self, activity:Activity) -> Verdict:
		if activity not in self.verdicts:
			if self.token is None:
				self.verdicts[activity] = Verdict(Reason.MALFORMED, "No bearer token presented.")
			else:
				self.verdicts[activity] = verify(self.token, self._root_key, time() if self._now is None else self._now,
						Scope(activity, self.path), audience=self._location, issuer=self._location)
		
		return self.verdicts[activity]
	
	def authorizes(self, activity:Activity) -> bool:
		return self.verdict(activity).passed
	
	@property
	def denial_status(self) -> int:
		"""403 when a genuine token lacked the scope, otherwise 401."""
		
		if self.token is None:
			return 401
		
		if any(v.reason is Reason.SCOPE_DENIED for v in self.verdicts.values()):
			return 403
		
		return 401
	
	@property
	def denial_detail(self) -> str:
		if self.token is None:
			return "A bearer token is required."
		
		reasons = sorted({str(v) for v in self.verdicts.values() if not v})
		return '; '.join(reasons) or "Not authorized."


def bearer(request:Request) -> Optional[str]:
	authorization = request.headers.get('Authorization', '')
	scheme, _, credential = authorization.partition(' ')
	
	if scheme.lower() != 'bearer' or not credential.strip():
		return None
	
	return credential.strip()
