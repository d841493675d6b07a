"""Endpoint configuration: plain validated classes, loadable from a single JSON document.

	{
		"base_url": "https://127.0.0.1:8443",
		"port": 8443,
		"store": {"backend": "directory", "root": "/srv/tpc"},
		"token_root_key": "...",
		"tls": {"certificate": "server.pem", "private_key": "server.key", "trust": "authority.pem"},
		"policy": {"clients": {"mover": {"secret": "...", "scopes": ["DOWNLOAD:/", "UPLOAD:/"]}}}
	}
"""

import json

from pathlib import Path
from typing import Optional, Sequence, Union

from typeguard import check_argument_types

from ..exc import ConfigError, TpcError
from ..issuer import AuthorizationPolicy
from ..path import split_url
from ..protocol import MAX_STREAMS
from ..store import StoreConfig


log = __import__('logging').getLogger(__name__)

MiB = 1024 * 1024
Number = Union[int, float]


def _unknown(section:str, data:dict, allowed) -> None:
	unknown = set(data) - set(allowed)
	
	if unknown:
		raise ConfigError(section, f"Unknown options: {', '.join(sorted(unknown))}")


class TLSConfig:
	"""Certificate material.

	`certificate` and `private_key` identify the server; `trust` is the authority bundle used to verify remote
	endpoints (the system store when unset); `client_ca`, when set, requests client certificates signed by it;
	`insecure` disables verification of remote endpoints entirely.
	"""
	
	__slots__ = ('certificate', 'private_key', 'trust', 'client_ca', 'insecure')
	
	def __init__(self, *, certificate:Optional[str]=None, private_key:Optional[str]=None, trust:Optional[str]=None,
			client_ca:Optional[str]=None, insecure:bool=False) -> None:
		assert check_argument_types()
		
		if bool(certificate) != bool(private_key):
			raise ConfigError('tls', "A certificate and its private key must be given together.")
		
		self.certificate = certificate
		self.private_key = private_key
		self.trust = trust
		self.client_ca = client_ca
		self.insecure = insecure
	
	def __repr__(self) -> str:
		return f"TLSConfig(certificate={self.certificate!r}, trust={self.trust!r}, insecure={self.insecure!r})"
	
	@classmethod
	def from_dict(cls, data:dict) -> 'TLSConfig':
		_unknown('tls', data, cls.__slots__)
		return cls(**data)
	
	@property
	def enabled(self) -> bool:
		return bool(self.certificate)
	
	@property
	def verify(self) -> Union[bool, str]:
		"""The `verify` argument for outbound requests."""
		
		if self.insecure:
			return False
		
		return self.trust or True


class FaultConfig:
	"""Misbehaviour to inject, for exercising failure handling in tests and drills.

	`error_rate` of the requests whose method is listed in `verbs` are answered with `error_status`, drawn from a
	generator seeded with `seed`. `stall` delays the first byte of every GET body by that many seconds. `rate_limit`
	caps GET bodies to that many bytes per second. `ranges` may be disabled to emulate servers without byte range
	support.
	"""
	
	__slots__ = ('seed', 'error_rate', 'error_status', 'verbs', 'stall', 'rate_limit', 'ranges')
	
	def __init__(self, *, seed:int=0, error_rate:Number=0.0, error_status:int=503, verbs:Sequence[str]=('HEAD', ),
			stall:Number=0.0, rate_limit:Optional[int]=None, ranges:bool=True) -> None:
		assert check_argument_types()
		
		if not 0.0 <= error_rate <= 1.0:
			raise ConfigError('faults.error_rate', "Must lie within [0, 1].")
		
		if not 400 <= error_status <= 599:
			raise ConfigError('faults.error_status', "Must be an HTTP error status.")
		
		if stall < 0:
			raise ConfigError('faults.stall', "Must not be negative.")
		
		if rate_limit is not None and rate_limit <= 0:
			raise ConfigError('faults.rate_limit', "Must be positive.")
		
		self.seed = seed
		self.error_rate = float(error_rate)
		self.error_status = error_status
		self.verbs = tuple(verb.upper() for verb in verbs)
		self.stall = float(stall)
		self.rate_limit = rate_limit
		self.ranges = ranges
	
	def __repr__(self) -> str:
		return f"FaultConfig(error_rate={self.error_rate!r}, verbs={self.verbs!r}, stall={self.stall!r}, " \
				f"rate_limit={self.rate_limit!r}, ranges={self.ranges!r})"
	
	@classmethod
	def from_dict(cls, data:dict) -> 'FaultConfig':
		_unknown('faults', data, cls.__slots__)
		return cls(**data)
	
	@property
	def active(self) -> bool:
		return bool(self.error_rate or self.stall or self.rate_limit or not self.ranges)


class EndpointConfig:
	"""Everything one storage endpoint needs to know.

	`token_issuer` is the location tokens must name; it defaults to `base_url`. Members of a redirect pool share the
	root key and issuer of the service they balance for.
	"""
	
	__slots__ = ('base_url', 'host', 'port', 'store', 'token_root_key', 'token_issuer', 'redirect_pool',
			'marker_period', 'pull_streams', 'max_active_copies', 'remote_timeout', 'min_stripe_bytes', 'propfind',
			'copy', 'token_service', 'tls', 'policy', 'faults')
	
	def __init__(self, *, base_url:str, token_root_key:str, host:str='127.0.0.1', port:int=0,
			store:Optional[StoreConfig]=None, token_issuer:Optional[str]=None, redirect_pool:Sequence[str]=(),
			marker_period:Number=5.0, pull_streams:int=4, max_active_copies:int=8, remote_timeout:Number=60.0,
			min_stripe_bytes:int=MiB, propfind:bool=True, copy:bool=True, token_service:bool=True,
			tls:Optional[TLSConfig]=None, policy:Optional[AuthorizationPolicy]=None,
			faults:Optional[FaultConfig]=None) -> None:
		assert check_argument_types()
		
		for name, url in [('base_url', base_url)] + [('redirect_pool', u) for u in redirect_pool]:
			try:
				split_url(url)
			except TpcError as e:
				raise ConfigError(name, e.detail)
		
		if not token_root_key:
			raise ConfigError('token_root_key', "A root key is required.")
		
		if not 0 <= port <= 65535:
			raise ConfigError('port', "Must be a TCP port number.")
		
		if marker_period <= 0:
			raise ConfigError('marker_period', "Must be positive.")
		
		if not 1 <= pull_streams <= MAX_STREAMS:
			raise ConfigError('pull_streams', f"Must lie within [1, {MAX_STREAMS}].")
		
		if max_active_copies < 1:
			raise ConfigError('max_active_copies', "At least one copy must be allowed to run.")
		
		if remote_timeout <= 0:
			raise ConfigError('remote_timeout', "Must be positive.")
		
		if min_stripe_bytes < 1:
			raise ConfigError('min_stripe_bytes', "Must be positive.")
		
		self.base_url = base_url.rstrip('/')
		self.host = host
		self.port = port
		self.store = store or StoreConfig()
		self.token_root_key = token_root_key
		self.token_issuer = (token_issuer or base_url).rstrip('/')
		self.redirect_pool = tuple(url.rstrip('/') for url in redirect_pool)
		self.marker_period = float(marker_period)
		self.pull_streams = pull_streams
		self.max_active_copies = max_active_copies
		self.remote_timeout = float(remote_timeout)
		self.min_stripe_bytes = min_stripe_bytes
		self.propfind = propfind
		self.copy = copy
		self.token_service = token_service
		self.tls = tls or TLSConfig()
		self.policy = policy or AuthorizationPolicy()
		self.faults = faults or FaultConfig()
	
	def __repr__(self) -> str:
		return f"EndpointConfig(base_url={self.base_url!r}, store={self.store!r}, pull_streams={self.pull_streams}, " \
				f"max_active_copies={self.max_active_copies}, redirect_pool={self.redirect_pool!r})"
	
	@classmethod
	def from_dict(cls, data:dict) -> 'EndpointConfig':
		data = dict(data)
		_unknown('endpoint', data, cls.__slots__)
		
		if 'store' in data:
			data['store'] = StoreConfig.from_dict(data['store'])
		
		if 'tls' in data:
			data['tls'] = TLSConfig.from_dict(data['tls'])
		
		if 'policy' in data:
			data['policy'] = AuthorizationPolicy.from_dict(data['policy'])
		
		if 'faults' in data:
			data['faults'] = FaultConfig.from_dict(data['faults'])
		
		if 'redirect_pool' in data:
			data['redirect_pool'] = tuple(data['redirect_pool'])
		
		try:
			return cls(**data)
		except TypeError as e:  # Missing required fields, or type violations reported by typeguard.
			raise ConfigError('endpoint', str(e))
	
	@classmethod
	def load(cls, path:str) -> 'EndpointConfig':
		try:
			data = json.loads(Path(path).read_text('utf-8'))
		except (OSError, ValueError) as e:
			raise ConfigError('config', f"Unable to read {path}: {e}")
		
		if not isinstance(data, dict):
			raise ConfigError('config', "The configuration document must be a JSON object.")
		
		config = cls.from_dict(data)
		log.info(f"Loaded endpoint configuration from {path}.", extra=dict(path=str(path), base_url=config.base_url))
		
		return config
