"""Meshes of endpoints for the harness to exercise.

An in-process mesh spawns endpoints inside this process on loopback ports, each serving HTTPS with a certificate from
one ephemeral authority, and each with its own root key and a policy admitting the harness client everywhere. A
remote mesh merely names existing endpoints and the credentials to use with them.

A mesh configuration document looks like:

	{
		"endpoints": 3,
		"members": [{}, {"copy": false}, {"faults": {"error_rate": 0.1, "verbs": ["HEAD"]}}],
		"dataset": {"file_count": 16, "file_size_bytes": 4194304, "seed": 1}
	}

or, for remote endpoints:

	{"endpoints": [{"url": "https://a.example", "client_id": "harness", "secret": "..."}, ...]}
"""

from pathlib import Path
from secrets import token_hex
from tempfile import TemporaryDirectory
from typing import Dict, List, NamedTuple, Optional, Sequence

from ..client import Backoff, Credential, Orchestrator
from ..endpoint import Endpoint, EndpointConfig, EndpointServer, FaultConfig, TLSConfig
from ..exc import ConfigError
from ..http import Verify
from ..issuer import AuthorizationPolicy, Client
from ..path import ROOT
from ..scope import Activity, Scope
from ..store import StoreConfig
from ..tls import Authority
from .dataset import DatasetConfig


log = __import__('logging').getLogger(__name__)

CLIENT_ID = 'harness'


class Member(NamedTuple):
	name: str
	url: str
	credential: Credential
	endpoint: Optional[Endpoint] = None  # Present only for in-process members.


class MeshConfig:
	"""What to exercise: either a number of in-process endpoints, with optional per-member overrides, or a list of
	remote endpoints; and the dataset to move between them."""
	
	__slots__ = ('count', 'members', 'remote', 'dataset', 'store')
	
	def __init__(self, *, count:int=0, members:Sequence[dict]=(), remote:Sequence[Member]=(),
			dataset:Optional[DatasetConfig]=None, store:str='memory') -> None:
		if count < 0:
			raise ConfigError('endpoints', "Must not be negative.")
		
		if count and remote:
			raise ConfigError('endpoints', "A mesh is either in-process or remote, not both.")
		
		if len(members) > count:
			raise ConfigError('members', f"Overrides given for {len(members)} members of {count}.")
		
		self.count = count
		self.members = [dict(m) for m in members]
		self.remote = list(remote)
		self.dataset = dataset or DatasetConfig()
		self.store = store
	
	def __repr__(self) -> str:
		return f"MeshConfig(count={self.count}, remote={len(self.remote)}, dataset={self.dataset!r})"
	
	@classmethod
	def from_dict(cls, data:dict) -> 'MeshConfig':
		unknown = set(data) - {'endpoints', 'members', 'dataset', 'store'}
		
		if unknown:
			raise ConfigError('mesh', f"Unknown options: {', '.join(sorted(unknown))}")
		
		endpoints = data.get('endpoints', 0)
		dataset = DatasetConfig.from_dict(data['dataset']) if 'dataset' in data else None
		
		if isinstance(endpoints, int):
			return cls(count=endpoints, members=data.get('members', ()), dataset=dataset,
					store=data.get('store', 'memory'))
		
		remote = []
		
		for i, entry in enumerate(endpoints):
			try:
				remote.append(Member(entry.get('name', f'remote-{i}'), entry['url'].rstrip('/'), Credential(
						entry.get('client_id'), entry.get('secret'), entry.get('certificate'), entry.get('private_key'))))
			except (KeyError, AttributeError):
				raise ConfigError(f'endpoints.{i}', "Each remote endpoint needs at least a url.")
		
		return cls(remote=remote, dataset=dataset)
	
	@property
	def size(self) -> int:
		return self.count or len(self.remote)


class Mesh:
	"""A running set of endpoints; use as a context manager."""
	
	def __init__(self, members:List[Member], verify:Verify=True) -> None:
		self.members = members
		self.verify = verify
	
	def __repr__(self) -> str:
		return f"{self.__class__.__name__}({[m.url for m in self.members]!r})"
	
	def __enter__(self) -> 'Mesh':
		return self
	
	def __exit__(self, *exc) -> None:
		self.stop()
	
	def __len__(self) -> int:
		return len(self.members)
	
	def __getitem__(self, index:int) -> Member:
		return self.members[index]
	
	@property
	def urls(self) -> List[str]:
		return [member.url for member in self.members]
	
	@property
	def credentials(self) -> Dict[str, Credential]:
		return {member.url: member.credential for member in self.members}
	
	def orchestrator(self, backoff:Optional[Backoff]=None, **kw) -> Orchestrator:
		return Orchestrator(self.credentials, verify=self.verify, backoff=backoff, **kw)
	
	def stop(self) -> None:
		pass


class RemoteMesh(Mesh):
	pass


class LocalMesh(Mesh):
	"""Endpoints served from this process.

	`options` apply to every member's `EndpointConfig`; `members` holds per-member overrides by position, whose
	`faults` and `store` entries may be given as plain dictionaries.
	"""
	
	def __init__(self, count:int, *, members:Sequence[dict]=(), directory:Optional[str]=None, store:str='memory',
			insecure:bool=False, **options) -> None:
		self._scratch = None if directory else TemporaryDirectory(prefix='web-tpc-mesh-')
		self.directory = Path(directory or self._scratch.name)
		self.authority = Authority(str(self.directory / 'tls'))
		self.secret = token_hex(16)
		self.insecure = insecure
		self.servers: List[EndpointServer] = []
		
		super().__init__([], verify=False if insecure else self.authority.certificate)
		
		try:
			for index in range(count):
				overrides = dict(members[index]) if index < len(members) else {}
				self.members.append(self._spawn(index, store, {**options, **overrides}))
		
		except BaseException:
			self.stop()
			raise
		
		log.info(f"Started an in-process mesh of {count} endpoints.", extra=dict(urls=self.urls))
	
	@property
	def policy(self) -> AuthorizationPolicy:
		return AuthorizationPolicy(clients={CLIENT_ID: Client(self.secret, [Scope(a, ROOT) for a in Activity], [])})
	
	def _spawn(self, index:int, store:str, options:dict) -> Member:
		name = f'endpoint-{index}'
		issued = self.authority.issue(name)
		tls = TLSConfig(certificate=issued.certificate, private_key=issued.private_key,
				trust=self.authority.certificate, insecure=self.insecure)
		
		if isinstance(options.get('faults'), dict):
			options['faults'] = FaultConfig.from_dict(options['faults'])
		
		if isinstance(options.get('store'), dict):
			options['store'] = StoreConfig.from_dict(options['store'])
		
		elif store == 'directory' and 'store' not in options:
			options['store'] = StoreConfig(backend='directory', root=str(self.directory / name))
		
		server = EndpointServer('127.0.0.1', 0, tls=tls)
		host, port = server.bind()
		self.servers.append(server)
		
		config = EndpointConfig(base_url=f'https://{host}:{port}', token_root_key=token_hex(32), host=host, port=port,
				tls=tls, policy=self.policy, **options)
		
		endpoint = Endpoint(config)
		server.mount(endpoint)
		server.start()
		
		return Member(name, config.base_url, Credential(CLIENT_ID, self.secret), endpoint)
	
	def stop(self) -> None:
		for server in self.servers:
			try:
				server.stop()
			except Exception:
				log.exception(f"Failed to stop {server!r}.")
		
		self.servers = []
		
		if self._scratch is not None:
			self._scratch.cleanup()
			self._scratch = None


def open_mesh(config:MeshConfig, verify:Verify=True, **options) -> Mesh:
	"""Start an in-process mesh, or wrap remote endpoints, as configured."""
	
	if config.remote:
		return RemoteMesh(config.remote, verify=verify)
	
	return LocalMesh(config.count, members=config.members, store=config.store, insecure=verify is False, **options)
