import json
import logging
import os
import signal
import socket
import subprocess
import sys

from pathlib import Path
from threading import Thread
from time import monotonic, sleep

import pytest
import requests

from web.tpc import cli
from web.tpc.cli import FAILED, OK, USAGE, StructuredFormatter, main
from web.tpc.endpoint import serve
from web.tpc.protocol import DISCOVERY_PATH
from web.tpc.tls import Authority
from web.tpc.token import parse_token


KEY = 'a command line root key'
ISSUER = 'https://a.example'
ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(autouse=True)
def restore_logging():
	root = logging.getLogger()
	handlers, level = root.handlers[:], root.level
	
	yield
	
	root.handlers[:] = handlers
	root.setLevel(level)


def run(capsys, *argv):
	status = main(list(argv))
	out, err = capsys.readouterr()
	return status, out, err


def minted(capsys, *scopes, lifetime=3600):
	arguments = ['token', 'mint', '--key', KEY, '--issuer', ISSUER, '--lifetime', str(lifetime)]
	
	for scope in scopes:
		arguments += ['--scope', scope]
	
	status, out, _ = run(capsys, *arguments)
	assert status == OK
	
	return out.strip()


def free_port():
	with socket.socket() as candidate:
		candidate.bind(('127.0.0.1', 0))
		return candidate.getsockname()[1]


def discovery(port, trust, deadline):
	while True:
		try:
			response = requests.get(f"https://127.0.0.1:{port}{DISCOVERY_PATH}", verify=trust, timeout=1)
		
		except requests.ConnectionError:
			if monotonic() > deadline:
				raise
			
			sleep(0.05)
			continue
		
		response.raise_for_status()
		return response.json()


@pytest.fixture
def configure(tmp_path):
	"""Write an endpoint configuration listening on the given loopback port; returns its path."""
	
	authority = Authority(str(tmp_path / 'tls'))
	issued = authority.issue('serve')
	
	def configure(port, **options):
		path = tmp_path / 'endpoint.json'
		path.write_text(json.dumps(dict(base_url=f"https://127.0.0.1:{port}", port=port, token_root_key=KEY,
				tls={'certificate': issued.certificate, 'private_key': issued.private_key}, **options)))
		
		return str(path)
	
	configure.trust = authority.certificate
	return configure


class TestToken(object):
	def test_mint(self, capsys):
		token = parse_token(minted(capsys, 'DOWNLOAD:/data', 'UPLOAD:/data/in'))
		
		assert token.issuer_location == ISSUER
		assert [str(scope) for scope in token.scopes] == ['DOWNLOAD:/data', 'UPLOAD:/data/in']
	
	def test_verify_passes(self, capsys):
		token = minted(capsys, 'DOWNLOAD:/data')
		status, out, _ = run(capsys, 'token', 'verify', token, '--key', KEY, '--scope', 'DOWNLOAD:/data/f')
		
		assert status == OK
		assert json.loads(out) == {'passed': True, 'reason': None, 'detail': ''}
	
	def test_verify_denies(self, capsys):
		token = minted(capsys, 'DOWNLOAD:/data')
		status, out, _ = run(capsys, 'token', 'verify', token, '--key', KEY, '--scope', 'UPLOAD:/data/f')
		
		assert status == FAILED
		assert json.loads(out)['reason'] == 'SCOPE_DENIED'
	
	def test_verify_at_an_instant(self, capsys):
		token = minted(capsys, 'DOWNLOAD:/data', lifetime=60)
		status, out, _ = run(capsys, 'token', 'verify', token, '--key', KEY, '--scope', 'DOWNLOAD:/data',
				'--at', str(4102444800))
		
		assert status == FAILED
		assert json.loads(out)['reason'] == 'EXPIRED'
	
	def test_verify_wrong_key(self, capsys):
		token = minted(capsys, 'DOWNLOAD:/data')
		status, out, _ = run(capsys, 'token', 'verify', token, '--key', 'another key', '--scope', 'DOWNLOAD:/data')
		
		assert status == FAILED
		assert json.loads(out)['reason'] == 'BAD_SIGNATURE'
	
	def test_verify_issuer(self, capsys):
		token = minted(capsys, 'DOWNLOAD:/data')
		status, out, _ = run(capsys, 'token', 'verify', token, '--key', KEY, '--scope', 'DOWNLOAD:/data',
				'--issuer', 'https://b.example')
		
		assert status == FAILED
	
	def test_attenuate_narrows(self, capsys):
		token = minted(capsys, 'DOWNLOAD:/data')
		status, out, _ = run(capsys, 'token', 'attenuate', token, '--scope', 'DOWNLOAD:/data/run1')
		narrowed = out.strip()
		
		assert status == OK
		assert run(capsys, 'token', 'verify', narrowed, '--key', KEY, '--scope', 'DOWNLOAD:/data/run1/f')[0] == OK
		assert run(capsys, 'token', 'verify', narrowed, '--key', KEY, '--scope', 'DOWNLOAD:/data/run2')[0] == FAILED
	
	def test_inspect(self, capsys):
		token = minted(capsys, 'DELETE:/scratch')
		status, out, _ = run(capsys, 'token', 'inspect', token)
		document = json.loads(out)
		
		assert status == OK
		assert document['issuer_location'] == ISSUER
		assert 'scope:DELETE:/scratch' in document['caveats']
	
	def test_inspect_malformed(self, capsys):
		status, out, err = run(capsys, 'token', 'inspect', 'not*a*token')
		
		assert status == FAILED
		assert out == ''
		assert 'malformed: ' in err
	
	def test_bad_scope_is_a_usage_error(self, capsys):
		status, _, err = run(capsys, 'token', 'mint', '--key', KEY, '--issuer', ISSUER, '--scope', 'download:/data')
		
		assert status == USAGE
		assert 'Unknown scope activity' in err


class TestUsage(object):
	def test_command_required(self, capsys):
		with pytest.raises(SystemExit) as excinfo:
			main([])
		
		assert excinfo.value.code == 2
	
	def test_serve_needs_configuration(self, capsys):
		status, _, err = run(capsys, 'serve')
		
		assert status == USAGE
		assert '--config' in err
	
	def test_unreadable_configuration(self, capsys, tmp_path):
		status, _, err = run(capsys, '--config', str(tmp_path / 'absent.json'), 'matrix')
		
		assert status == USAGE
		assert 'Unable to read' in err
	
	def test_invalid_mesh(self, capsys, tmp_path):
		config = tmp_path / 'mesh.json'
		config.write_text(json.dumps({'endpoints': 2, 'colour': 'blue'}))
		
		status, _, err = run(capsys, '--config', str(config), 'matrix')
		
		assert status == USAGE
		assert 'colour' in err


class TestServe(object):
	def test_serves_discovery_promptly(self, configure, monkeypatch):
		port = free_port()
		servers = []
		
		def capture(config):
			servers.append(serve(config))
			return servers[-1]
		
		monkeypatch.setattr(cli, 'serve', capture)
		
		statuses = []
		thread = Thread(target=lambda: statuses.append(main(['--config', configure(port), 'serve'])), daemon=True)
		started = monotonic()
		thread.start()
		
		try:
			document = discovery(port, configure.trust, started + 2)
			elapsed = monotonic() - started
		
		finally:
			while thread.is_alive() and not servers:
				sleep(0.05)
			
			for server in servers:
				server.interrupt()
			
			thread.join(15)
		
		assert elapsed < 2
		assert document['issuer'] == f"https://127.0.0.1:{port}"
		assert not thread.is_alive()
		assert statuses == [OK]
		assert not servers[0].running
	
	def test_stops_cleanly_on_sigterm(self, configure):
		port = free_port()
		environment = dict(os.environ, PYTHONPATH=os.pathsep.join(filter(None, [str(ROOT),
				os.environ.get('PYTHONPATH')])))
		
		process = subprocess.Popen([sys.executable, '-c', "import sys; from web.tpc.cli import main; sys.exit(main())",
				'--config', configure(port), 'serve'], cwd=str(ROOT), env=environment,
				stdout=subprocess.DEVNULL, stderr=subprocess.PIPE)
		
		try:
			discovery(port, configure.trust, monotonic() + 20)
			process.send_signal(signal.SIGTERM)
			_, err = process.communicate(timeout=20)
		
		finally:
			if process.poll() is None:
				process.kill()
				process.communicate()
		
		assert process.returncode == OK
		assert b'Received SIGTERM; shutting down.' in err
		assert b'Stopped serving' in err
	
	def test_port_in_use(self, capsys, configure):
		with socket.socket() as held:
			held.bind(('127.0.0.1', 0))
			held.listen(1)
			
			status, _, err = run(capsys, '--config', configure(held.getsockname()[1]), 'serve')
		
		assert status == FAILED
		assert 'Unable to listen on 127.0.0.1:' in err
	
	def test_invalid_stream_count(self, capsys, configure):
		status, _, err = run(capsys, '--config', configure(free_port(), pull_streams=0), 'serve')
		
		assert status == USAGE
		assert 'error: pull_streams: ' in err


class TestHarness(object):
	def test_matrix_report(self, capsys, tmp_path):
		report = tmp_path / 'matrix.json'
		status, out, err = run(capsys, '-q', '--json', str(report), 'matrix', '--endpoints', '2', '--file-size', '4096')
		document = json.loads(report.read_text())
		
		assert status == OK
		assert out == ''
		assert document['kind'] == 'matrix'
		assert document['summary'] == {'cells': 4, 'succeeded': 4, 'failed': 0}
		assert document['table'] in err
	
	def test_smoke_to_standard_output(self, capsys):
		status, out, _ = run(capsys, '-q', 'smoke', '--size', '65536')
		document = json.loads(out)
		
		assert status == OK
		assert document['kind'] == 'smoke'
		assert document['passed']


class TestFormatter(object):
	def test_extra_fields(self):
		record = logging.LogRecord('web.tpc.test', logging.INFO, __file__, 1, "Copied.", (), None)
		record.bytes = 4
		record.path = '/data/f'
		
		line = StructuredFormatter().format(record)
		
		assert line.endswith('INFO    web.tpc.test Copied. bytes=4 path="/data/f"')
	
	def test_no_extra_fields(self):
		record = logging.LogRecord('web.tpc.test', logging.WARNING, __file__, 1, "Plain.", (), None)
		
		assert StructuredFormatter().format(record).endswith('WARNING web.tpc.test Plain.')
