from hashlib import md5, sha256
from hmac import compare_digest
from hmac import new as hmac
from os import getpid
from random import randint
from socket import gethostname
from threading import RLock
from time import time
from typing import Union


log = __import__('logging').getLogger(__name__)

MACHINE = int(md5(gethostname().encode()).hexdigest()[:6], 16)

Secret = Union[str, bytes]


class Counter:
	"""A thread-safe wrapping counter starting at a random point."""
	
	def __init__(self, modulus:int=0xFFFFFF):
		self.modulus = modulus
		self.value = randint(0, modulus - 1)
		self.lock = RLock()
	
	def __iter__(self):
		return self
	
	def __next__(self) -> int:
		with self.lock:
			self.value = (self.value + 1) % self.modulus
			value = self.value
		
		return value
	
	next = __next__

counter = Counter()


class KeyIdentifier:
	"""A 24 hexadecimal character identifier unique across time, host, and process.

	Used as the key identifier at the head of each token's signature chain.
	"""
	
	__slots__ = ('time', 'machine', 'process', 'counter')
	
	def __init__(self, value:str=None):
		if value:
			self.parse(value)
		else:
			self.generate()
	
	def parse(self, value:str) -> None:
		if len(value) != 24:
			raise ValueError(f"Invalid key identifier length: {value!r}")
		
		self.time = int(value[:8], 16)
		self.machine = int(value[8:14], 16)
		self.process = int(value[14:18], 16)
		self.counter = int(value[18:24], 16)
	
	def generate(self) -> None:
		self.time = int(time())
		self.machine = MACHINE
		self.process = getpid() % 0xFFFF
		self.counter = next(counter)
	
	def __bytes__(self):
		return str(self).encode('ascii')
	
	def __str__(self):
		return f"{self.time:08x}{self.machine:06x}{self.process:04x}{self.counter:06x}"
	
	def __repr__(self):
		return f"{self.__class__.__name__}('{self}')"


def secret(value:Secret) -> bytes:
	return value.encode('utf-8') if isinstance(value, str) else bytes(value)


def keyed(key:Secret, message:Union[str, bytes]) -> bytes:
	"""HMAC-SHA256 of a message under a key."""
	
	if isinstance(message, str):
		message = message.encode('utf-8')
	
	return hmac(secret(key), message, sha256).digest()


def equal(a:bytes, b:bytes) -> bool:
	return compare_digest(a, b)
