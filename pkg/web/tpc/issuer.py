"""The OAuth2 authorization server embedded in every endpoint.

Clients discover the token endpoint through RFC 8414 metadata, then exchange client credentials for a bearer token
carrying the `ACTIVITY:PATH` scopes they request, provided their policy grants cover them.
"""

from base64 import b64decode
from binascii import Error as DecodingError
from hmac import compare_digest
from re import split
from threading import Lock
from time import time
from typing import Dict, List, Mapping, NamedTuple, Optional

from typeguard import check_argument_types
from webob import Request, Response

from .exc import ConfigError, Kind, TpcError
from .protocol import DISCOVERY_PATH, TOKEN_PATH
from .scope import Activity, Scope, parse_scope
from .token import TransferToken, mint
from .util import Secret


log = __import__('logging').getLogger(__name__)

GRANT_TYPE = 'client_credentials'


class TokenRequest(NamedTuple):
	grant_type: str
	requested_scopes: List[Scope]
	client_id: str
	lifetime_hint: Optional[int] = None
	audience: Optional[str] = None


class Client(NamedTuple):
	secret: Optional[str]
	scopes: List[Scope]
	subjects: List[str]  # Client certificate distinguished names mapped to this client.


class AuthorizationPolicy:
	"""Which clients exist, how they authenticate, and the maximal scopes each may be granted."""
	
	__slots__ = ('clients', 'default_lifetime', 'max_lifetime')
	
	clients: Dict[str, Client]
	default_lifetime: int
	max_lifetime: int
	
	def __init__(self, *, clients:Optional[Mapping[str, Client]]=None, default_lifetime:int=3600,
			max_lifetime:int=86400) -> None:
		assert check_argument_types()
		
		if default_lifetime <= 0:
			raise ConfigError('policy.default_lifetime', "Must be positive.")
		
		if default_lifetime > max_lifetime:
			raise ConfigError('policy.default_lifetime', f"Exceeds the maximum lifetime of {max_lifetime} seconds.")
		
		self.clients = dict(clients or {})
		self.default_lifetime = default_lifetime
		self.max_lifetime = max_lifetime
	
	def __repr__(self) -> str:
		return f"AuthorizationPolicy(clients={sorted(self.clients)!r}, default_lifetime={self.default_lifetime}, " \
				f"max_lifetime={self.max_lifetime})"
	
	@classmethod
	def from_dict(cls, data:dict) -> 'AuthorizationPolicy':
		"""Construct from the `policy` section of an endpoint configuration document.

			{"clients": {"mover": {"secret": "...", "scopes": ["DOWNLOAD:/", "UPLOAD:/"], "subjects": []}},
			 "default_lifetime": 3600, "max_lifetime": 86400}
		"""
		
		data = dict(data)
		clients = {}
		
		for name, client in data.pop('clients', {}).items():
			try:
				scopes = [parse_scope(text) for text in client.get('scopes', ())]
			except TpcError as e:
				raise ConfigError(f'policy.clients.{name}.scopes', e.detail)
			
			clients[name] = Client(client.get('secret'), scopes, list(client.get('subjects', ())))
		
		unknown = set(data) - {'default_lifetime', 'max_lifetime'}
		
		if unknown:
			raise ConfigError('policy', f"Unknown options: {', '.join(sorted(unknown))}")
		
		return cls(clients=clients, **data)
	
	def grants(self, client_id:str) -> List[Scope]:
		client = self.clients.get(client_id)
		return client.scopes if client else []
	
	def authenticate(self, client_id:str, secret:str) -> bool:
		client = self.clients.get(client_id)
		
		if client is None or client.secret is None:
			return False
		
		return compare_digest(client.secret.encode('utf-8'), secret.encode('utf-8'))
	
	def subject(self, name:str) -> Optional[str]:
		"""The client identifier mapped to a client certificate subject, if any."""
		
		wanted = distinguished(name)
		
		for client_id, client in self.clients.items():
			if any(distinguished(subject) == wanted for subject in client.subjects):
				return client_id
		
		return None
	
	def lifetime(self, hint:Optional[int]=None) -> int:
		return min(hint or self.default_lifetime, self.max_lifetime)


def distinguished(name:str) -> frozenset:
	"""Normalize a distinguished name, in either slash or comma separated form, for comparison."""
	return frozenset(part.strip() for part in split(r'[/,]', name) if part.strip())


def discovery_document(endpoint_base:str) -> dict:
	base = endpoint_base.rstrip('/')
	
	return {
			'issuer': base,
			'token_endpoint': base + TOKEN_PATH,
			'grant_types_supported': [GRANT_TYPE],
			'response_types_supported': ['token'],
			'token_endpoint_auth_methods_supported': ['client_secret_basic', 'client_secret_post', 'tls_client_auth'],
			'scopes_supported': [f"{activity}:/" for activity in Activity],
		}


def issue_token(req:TokenRequest, policy:AuthorizationPolicy, now:float, *, root_key:Secret,
		issuer_location:str) -> TransferToken:
	"""Issue a token for exactly the requested scopes, each of which must lie within one of the client's grants."""
	
	if req.grant_type != GRANT_TYPE:
		raise TpcError(Kind.BAD_REQUEST, f"Unsupported grant type: {req.grant_type!r}")
	
	if not req.requested_scopes:
		raise TpcError(Kind.BAD_REQUEST, "At least one scope must be requested.")
	
	if req.lifetime_hint is not None and req.lifetime_hint <= 0:
		raise TpcError(Kind.BAD_REQUEST, "Requested lifetime must be positive.")
	
	grants = policy.grants(req.client_id)
	
	for scope in req.requested_scopes:
		if not any(grant.covers(scope) for grant in grants):
			raise TpcError(Kind.FORBIDDEN, f"Client {req.client_id} may not be granted {scope}.")
	
	before = int(now) + policy.lifetime(req.lifetime_hint)
	
	return mint(root_key, issuer_location, req.requested_scopes, before, audience=req.audience)


def _error(status:int, error:str, description:str, **headers) -> Response:
	response = Response(status=status, json_body={'error': error, 'error_description': description})
	response.headers['Cache-Control'] = 'no-store'
	response.headers.update(headers)
	return response


class TokenIssuer:
	"""Serves discovery metadata and the client-credentials token endpoint.

	Also usable as a standalone WSGI application.
	"""
	
	def __init__(self, location:str, root_key:Secret, policy:AuthorizationPolicy, enabled:bool=True) -> None:
		self.location = location.rstrip('/')
		self.enabled = enabled
		self._root_key = root_key
		self._policy = policy
		self._lock = Lock()
	
	def __repr__(self) -> str:
		return f"TokenIssuer({self.location!r}, {self._policy!r})"
	
	@property
	def policy(self) -> AuthorizationPolicy:
		return self._policy
	
	def reload(self, policy:AuthorizationPolicy) -> None:
		with self._lock:
			self._policy = policy
		
		log.info("Authorization policy reloaded.", extra=dict(issuer=self.location, clients=sorted(policy.clients)))
	
	def __call__(self, environ, start_response):
		request = Request(environ)
		
		if request.path_info == DISCOVERY_PATH:
			response = self.discovery(request)
		elif request.path_info == TOKEN_PATH:
			response = self.token(request)
		else:
			response = _error(404, 'not_found', "No such resource.")
		
		return response(environ, start_response)
	
	def discovery(self, request:Request) -> Response:
		if not self.enabled:
			return _error(404, 'not_found', "This endpoint does not issue tokens.")
		
		if request.method not in ('GET', 'HEAD'):
			return _error(405, 'invalid_request', "Discovery metadata is retrieved with GET.", Allow='GET, HEAD')
		
		return Response(json_body=discovery_document(self.location))
	
	def token(self, request:Request) -> Response:
		if not self.enabled:
			return _error(404, 'not_found', "This endpoint does not issue tokens.")
		
		if request.method != 'POST':
			return _error(405, 'invalid_request', "Tokens are requested with POST.", Allow='POST')
		
		if request.content_type != 'application/x-www-form-urlencoded':
			return _error(400, 'invalid_request', "Token requests must be form encoded.")
		
		client_id = self._authenticate(request)
		
		if client_id is None:
			log.error("Token request from an unauthenticated client.", extra=dict(remote=request.client_addr))
			return _error(401, 'invalid_client', "Client authentication failed.",
					**{'WWW-Authenticate': 'Basic realm="token"'})
		
		form = request.POST
		hint = form.get('expires_in')
		
		try:
			scopes = [parse_scope(text) for text in form.get('scope', '').split()]
			req = TokenRequest(form.get('grant_type', ''), scopes, client_id, int(hint) if hint else None,
					form.get('audience') or None)
		
		except (TpcError, ValueError) as e:
			return _error(400, 'invalid_request', getattr(e, 'detail', str(e)))
		
		if req.grant_type != GRANT_TYPE:
			return _error(400, 'unsupported_grant_type', f"Only {GRANT_TYPE} is supported.")
		
		try:
			token = issue_token(req, self._policy, time(), root_key=self._root_key, issuer_location=self.location)
		except TpcError as e:
			if e.kind is Kind.FORBIDDEN:
				log.error("Token request exceeds client grants.", extra=dict(client=client_id, detail=e.detail))
				return _error(403, 'access_denied', e.detail)
			
			return _error(400, 'invalid_request', e.detail)
		
		expires_in = token.expires - int(time())
		
		log.info("Issued token.", extra=dict(client=client_id, key=token.key_id, scopes=[str(s) for s in scopes],
				expires_in=expires_in))
		
		response = Response(json_body={'access_token': token.serialize(), 'token_type': 'bearer',
				'expires_in': expires_in})
		response.headers['Cache-Control'] = 'no-store'
		
		return response
	
	def _authenticate(self, request:Request) -> Optional[str]:
		"""Identify the client by HTTP Basic credentials, form credentials, or TLS client certificate."""
		
		policy = self._policy
		authorization = request.headers.get('Authorization', '')
		
		if authorization[:6].lower() == 'basic ':
			try:
				client_id, _, secret = b64decode(authorization[6:].strip(), validate=True).decode('utf-8').partition(':')
			except (DecodingError, UnicodeDecodeError):
				return None
			
			return client_id if policy.authenticate(client_id, secret) else None
		
		if 'client_id' in request.POST:
			client_id = request.POST['client_id']
			return client_id if policy.authenticate(client_id, request.POST.get('client_secret', '')) else None
		
		subject = request.environ.get('SSL_CLIENT_S_DN')
		
		if subject:
			return policy.subject(subject)
		
		return None
