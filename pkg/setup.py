#!/usr/bin/env python3

from setuptools import setup
from sys import argv, version_info as python_version
from pathlib import Path


if python_version < (3, 9):
	raise SystemExit("Python 3.9 or later is required.")

here = Path(__file__).resolve().parent
version = description = url = author = None  # Populated by the next line.
exec((here / "web" / "tpc" / "release.py").read_text('utf-8'))

tests_require = [
		'pytest',  # test collector and extensible runner
		'pytest-cov',  # coverage reporting
		'hypothesis',  # property-based token testing
	]


setup(
	name = "web.tpc",
	version = version,
	
	description = description,
	long_description = (here / 'README.rst').read_text('utf-8'),
	url = url,
	download_url = 'https://github.com/marrow/web.tpc/releases',
	
	author = author.name,
	author_email = author.email,
	
	license = 'MIT',
	keywords = [
			'web.tpc',
			'WebDAV',
			'COPY',
			'third-party copy',
			'macaroon',
			'bearer token',
			'data transfer',
		],
	classifiers = [
			"Development Status :: 4 - Beta",
			"Environment :: Console",
			"Environment :: Web Environment",
			"Intended Audience :: Developers",
			"Intended Audience :: Science/Research",
			"License :: OSI Approved :: MIT License",
			"Operating System :: OS Independent",
			"Programming Language :: Python",
			"Programming Language :: Python :: 3",
			"Programming Language :: Python :: 3.9",
			"Programming Language :: Python :: 3.10",
			"Programming Language :: Python :: 3.11",
			"Programming Language :: Python :: Implementation :: CPython",
			"Topic :: Internet :: WWW/HTTP :: WSGI :: Application",
			"Topic :: System :: Archiving :: Mirroring",
		],
	
	packages = ('web.tpc', 'web.tpc.endpoint', 'web.tpc.harness', 'web.tpc.store'),
	include_package_data = True,
	package_data = {'': ['README.rst', 'LICENSE.txt'], 'web.tpc': ['schema/*.json']},
	zip_safe = False,
	
	setup_requires = [
			'pytest-runner',
		] if {'pytest', 'test', 'ptr'}.intersection(argv) else [],
	
	install_requires = [
			'WebOb>=1.8',  # Request and response objects.
			'marrow.package~=2.0',  # Plugin management.
			'typeguard>=2.13,<3',  # Argument type checking.
			'cachetools>=4.0',  # Discovery metadata caching.
			'cheroot>=8.0',  # Threaded WSGI and TLS server.
			'requests>=2.24',  # Outbound HTTP.
			'urllib3',  # Read timeout classification beneath requests.
			'cryptography>=3.1',  # Ephemeral certificate authorities.
			'jsonschema>=4.0',  # Report validation.
		],
	
	extras_require = dict(
			development = tests_require + ['pre-commit', 'bandit', 'e', 'pudb', 'ptipython'],
		),
	
	tests_require = tests_require,
	
	entry_points = {
			'console_scripts': [
					'web-tpc = web.tpc.cli:main',
				],
			'web.tpc.store': [
					'memory = web.tpc.store.memory:MemoryStore',
					'directory = web.tpc.store.directory:DirectoryStore',
				],
			'web.tpc.predicate': [
					'always = web.tpc.predicate:always',
					'never = web.tpc.predicate:never',
					'grants = web.tpc.predicate:Grants',
					'transfer = web.tpc.predicate:Transfer',
				],
		},
)
