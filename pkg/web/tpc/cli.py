"""The `web-tpc` command line: serve an endpoint, run the interoperability harness, and debug tokens.
	
	web-tpc serve --config endpoint.json
	web-tpc smoke
	web-tpc --json matrix.json matrix --endpoints 3
	web-tpc scale-drill --endpoints 4 --files 16 --file-size 4194304 --cycles 2
	web-tpc token mint --key secret --issuer https://a.example --scope DOWNLOAD:/data

Exit status is 0 when everything passed, 1 on any functional failure, and 2 for usage or configuration errors.
"""

import json
import logging
import signal
import sys

from argparse import ArgumentParser, Namespace
from pathlib import Path
from threading import current_thread, main_thread
from time import time
from typing import List, Optional

from .client import Credential, Orchestrator
from .endpoint import EndpointConfig, serve
from .exc import ConfigError, TpcError
from .harness.dataset import DatasetConfig
from .harness.drill import cmd_scale_drill
from .harness.matrix import cmd_matrix
from .harness.mesh import LocalMesh, Member, MeshConfig, open_mesh
from .harness.report import write
from .harness.smoke import cmd_smoke
from .release import version
from .scope import parse_scope
from .token import attenuate, mint, parse_token, verify, SignatureError


log = __import__('logging').getLogger(__name__)

OK, FAILED, USAGE = 0, 1, 2

_RESERVED = frozenset(vars(logging.LogRecord('', 0, '', 0, '', (), None))) | {'message', 'asctime'}


class StructuredFormatter(logging.Formatter):
	"""One line per record: time, level, logger, message, then the `extra` fields as `key=value` pairs."""
	
	def __init__(self) -> None:
		super().__init__('%(asctime)s %(levelname)-7s %(name)s %(message)s')
	
	def format(self, record:logging.LogRecord) -> str:
		line = super().format(record)
		fields = {k: v for k, v in vars(record).items() if k not in _RESERVED and not k.startswith('_')}
		
		if fields:
			line += ' ' + ' '.join(f"{key}={json.dumps(value, default=str)}" for key, value in sorted(fields.items()))
		
		return line


def configure_logging(verbosity:int) -> None:
	handler = logging.StreamHandler(sys.stderr)
	handler.setFormatter(StructuredFormatter())
	
	root = logging.getLogger()
	root.handlers[:] = [handler]
	root.setLevel(logging.DEBUG if verbosity > 0 else logging.WARNING if verbosity < 0 else logging.INFO)


def _load(path:str) -> dict:
	try:
		data = json.loads(Path(path).read_text('utf-8'))
	except (OSError, ValueError) as e:
		raise ConfigError('config', f"Unable to read {path}: {e}")
	
	if not isinstance(data, dict):
		raise ConfigError('config', "The configuration document must be a JSON object.")
	
	return data


def _mesh_config(args:Namespace, count:int, dataset:Optional[DatasetConfig]=None) -> MeshConfig:
	if args.config:
		document = _load(args.config)
		config = MeshConfig.from_dict(document)
		
		if dataset is not None and 'dataset' not in document:
			config.dataset = dataset
		
		return config
	
	members = [{'faults': {'seed': args.seed, 'error_rate': args.error_rate}}] if getattr(args, 'error_rate', 0) else []
	
	return MeshConfig(count=count, members=members, dataset=dataset, store=getattr(args, 'store', 'memory'))


def _report(args:Namespace, document:dict, passed:bool) -> int:
	write(document, args.json or '-')
	return OK if passed else FAILED


# Commands.

def cmd_serve(args:Namespace) -> int:
	if not args.config:
		raise ConfigError('config', "serve requires --config naming an endpoint configuration document.")
	
	config = EndpointConfig.load(args.config)
	
	if args.insecure_tls:
		config.tls.insecure = True
	
	try:
		server = serve(config)
	except OSError as e:
		log.error(f"Unable to listen on {config.host}:{config.port}: {e}", extra=dict(host=config.host,
				port=config.port))
		return FAILED
	
	if current_thread() is main_thread():
		previous = signal.signal(signal.SIGTERM, server.interrupt)
		
		try:
			server.wait()
		finally:
			signal.signal(signal.SIGTERM, previous or signal.SIG_DFL)
	
	else:  # Signal handlers can only be installed from the main thread.
		server.wait()
	
	return OK


def smoke(args:Namespace) -> int:
	verify_tls = not args.insecure_tls
	
	if args.endpoint:
		target = Member('target', args.endpoint.rstrip('/'), Credential(args.client_id, args.secret))
		
		with LocalMesh(1, insecure=args.insecure_tls) as peers:
			# Without --insecure-tls both the target and the peer must present certificates from system roots.
			orchestrator = Orchestrator({target.url: target.credential, **peers.credentials}, verify=verify_tls)
			document = cmd_smoke(target, peers[0], orchestrator, size=args.size, seed=args.seed)
	
	else:
		with open_mesh(_mesh_config(args, 2), verify=verify_tls) as mesh:
			peer = mesh[1] if len(mesh) > 1 else None
			document = cmd_smoke(mesh[0], peer, mesh.orchestrator(), size=args.size, seed=args.seed)
	
	return _report(args, document, document['passed'])


def matrix(args:Namespace) -> int:
	config = _mesh_config(args, args.endpoints, DatasetConfig(file_size_bytes=args.file_size, seed=args.seed))
	
	with open_mesh(config, verify=not args.insecure_tls) as mesh:
		document = cmd_matrix(mesh, config.dataset, mesh.orchestrator(), workers=args.workers,
				attempt_budget=args.attempts)
	
	sys.stderr.write(document['table'])
	
	return _report(args, document, document['summary']['failed'] == 0)


def drill(args:Namespace) -> int:
	dataset = DatasetConfig(file_count=args.files, file_size_bytes=args.file_size, seed=args.seed)
	config = _mesh_config(args, args.endpoints, dataset)
	
	with open_mesh(config, verify=not args.insecure_tls) as mesh:
		document = cmd_scale_drill(mesh, config.dataset, mesh.orchestrator(), args.cycles,
				concurrency=args.concurrency, interval=args.interval, attempt_budget=args.attempts)
	
	return _report(args, document, document['passed'])


def token(args:Namespace) -> int:
	if args.action == 'mint':
		minted = mint(args.key, args.issuer, [parse_scope(s) for s in args.scope], time() + args.lifetime,
				audience=args.audience)
		sys.stdout.write(minted.serialize() + "\n")
		return OK
	
	if args.action == 'inspect':
		try:
			parsed = parse_token(args.token)
		except SignatureError as e:
			sys.stderr.write(f"malformed: {e}\n")
			return FAILED
		
		sys.stdout.write(json.dumps(parsed.as_dict(), indent=2) + "\n")
		return OK
	
	if args.action == 'attenuate':
		caveats = [f'scope:{parse_scope(s)}' for s in args.scope]
		
		if args.before:
			caveats.append(f'before:{args.before}')
		
		if args.audience:
			caveats.append(f'audience:{args.audience}')
		
		try:
			attenuated = attenuate(parse_token(args.token), *caveats)
		except SignatureError as e:
			sys.stderr.write(f"malformed: {e}\n")
			return FAILED
		
		sys.stdout.write(attenuated.serialize() + "\n")
		return OK
	
	verdict = verify(args.token, args.key, args.at or time(), parse_scope(args.scope), audience=args.audience,
			issuer=args.issuer)
	sys.stdout.write(json.dumps({'passed': verdict.passed, 'reason': verdict.reason and str(verdict.reason),
			'detail': verdict.detail}) + "\n")
	
	return OK if verdict else FAILED


# Parsing.

def parser() -> ArgumentParser:
	parser = ArgumentParser(prog='web-tpc', description="HTTP third-party copy endpoints, orchestration, and "
			"interoperability harness.")
	
	parser.add_argument('--version', action='version', version=f'%(prog)s {version}')
	parser.add_argument('--config', help="endpoint (serve) or mesh (harness) configuration document")
	parser.add_argument('--json', metavar='OUT', help="write the JSON report here instead of standard output")
	parser.add_argument('--insecure-tls', action='store_true', help="do not verify certificates (test meshes only)")
	parser.add_argument('--seed', type=int, default=0, help="seed for generated data and injected faults")
	parser.add_argument('-v', '--verbose', action='count', default=0)
	parser.add_argument('-q', '--quiet', action='count', default=0)
	
	commands = parser.add_subparsers(dest='command', required=True)
	
	command = commands.add_parser('serve', help="serve one endpoint until interrupted")
	command.set_defaults(handler=cmd_serve)
	
	command = commands.add_parser('smoke', help="exercise one endpoint end to end")
	command.add_argument('--endpoint', help="base URL of a remote endpoint; an in-process one otherwise")
	command.add_argument('--client-id', default='harness')
	command.add_argument('--secret')
	command.add_argument('--size', type=int, default=1024 * 1024)
	command.set_defaults(handler=smoke)
	
	command = commands.add_parser('matrix', help="copy between every ordered pair of endpoints, in both modes")
	command.add_argument('--endpoints', type=int, default=3)
	command.add_argument('--file-size', type=int, default=1024 * 1024)
	command.add_argument('--workers', type=int, default=4)
	command.add_argument('--attempts', type=int, default=1)
	command.set_defaults(handler=matrix)
	
	command = commands.add_parser('scale-drill', help="replicate a dataset everywhere, delete it, and repeat")
	command.add_argument('--endpoints', type=int, default=4)
	command.add_argument('--files', type=int, default=16)
	command.add_argument('--file-size', type=int, default=4 * 1024 * 1024)
	command.add_argument('--cycles', type=int, default=2)
	command.add_argument('--concurrency', type=int, default=4, help="transfers in flight per destination")
	command.add_argument('--interval', type=float, default=60.0, help="throughput bucket width in seconds")
	command.add_argument('--attempts', type=int, default=3)
	command.add_argument('--error-rate', type=float, default=0.0, help="HEAD failure rate injected at the origin")
	command.add_argument('--store', choices=('memory', 'directory'), default='memory')
	command.set_defaults(handler=drill)
	
	command = commands.add_parser('token', help="mint, verify, attenuate, or inspect tokens")
	actions = command.add_subparsers(dest='action', required=True)
	
	action = actions.add_parser('mint')
	action.add_argument('--key', required=True)
	action.add_argument('--issuer', required=True)
	action.add_argument('--scope', action='append', required=True)
	action.add_argument('--lifetime', type=int, default=3600)
	action.add_argument('--audience')
	
	action = actions.add_parser('verify')
	action.add_argument('token')
	action.add_argument('--key', required=True)
	action.add_argument('--scope', required=True)
	action.add_argument('--issuer')
	action.add_argument('--audience')
	action.add_argument('--at', type=float, help="the instant to verify at, in Unix seconds")
	
	action = actions.add_parser('attenuate')
	action.add_argument('token')
	action.add_argument('--scope', action='append', default=[])
	action.add_argument('--before', help="an instant such as 2030-01-01T00:00:00Z")
	action.add_argument('--audience')
	
	action = actions.add_parser('inspect')
	action.add_argument('token')
	
	command.set_defaults(handler=token)
	
	return parser


def main(argv:Optional[List[str]]=None) -> int:
	args = parser().parse_args(argv)
	configure_logging(args.verbose - args.quiet)
	
	try:
		return args.handler(args)
	
	except ConfigError as e:
		log.error(f"Configuration error: {e.detail}", extra=dict(field=e.field))
		sys.stderr.write(f"error: {e.detail}\n")
		return USAGE
	
	except TpcError as e:
		log.error(f"{args.command} failed: {e}", extra=dict(kind=e.kind.name))
		sys.stderr.write(f"error: {e.reason}\n")
		return USAGE if e.status == 400 else FAILED
