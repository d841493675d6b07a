"""Ephemeral certificate material for loopback meshes and tests.

An `Authority` is a throwaway certification authority; it issues server certificates naming loopback addresses and
client certificates for mutual TLS. Everything is written as PEM beneath a working directory, since both the WSGI
server and the HTTP client consume file paths.
"""

from datetime import datetime, timedelta, timezone
from ipaddress import ip_address
from pathlib import Path
from typing import Iterable, NamedTuple

from cryptography import x509
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.x509.oid import ExtendedKeyUsageOID, NameOID


log = __import__('logging').getLogger(__name__)

LOOPBACK = ('127.0.0.1', '::1', 'localhost')


class Issued(NamedTuple):
	certificate: str  # Path to the PEM certificate.
	private_key: str  # Path to the PEM private key.
	subject: str  # The distinguished name, as mutual TLS environments report it.


def _name(common_name:str) -> x509.Name:
	return x509.Name([
			x509.NameAttribute(NameOID.ORGANIZATION_NAME, "web.tpc"),
			x509.NameAttribute(NameOID.COMMON_NAME, common_name),
		])


def _write_key(key, path:Path) -> None:
	path.write_bytes(key.private_bytes(
			encoding = serialization.Encoding.PEM,
			format = serialization.PrivateFormat.PKCS8,
			encryption_algorithm = serialization.NoEncryption(),
		))
	path.chmod(0o600)


class Authority:
	"""A self-signed certification authority living in a directory."""
	
	def __init__(self, directory:str, common_name:str="web.tpc ephemeral authority", days:int=2) -> None:
		self.directory = Path(directory)
		self.directory.mkdir(parents=True, exist_ok=True)
		self.days = days
		
		self._key = ec.generate_private_key(ec.SECP256R1())
		now = datetime.now(timezone.utc)
		public = self._key.public_key()
		
		self._certificate = (x509.CertificateBuilder()
				.subject_name(_name(common_name))
				.issuer_name(_name(common_name))
				.public_key(public)
				.serial_number(x509.random_serial_number())
				.not_valid_before(now - timedelta(minutes=5))
				.not_valid_after(now + timedelta(days=days))
				.add_extension(x509.BasicConstraints(ca=True, path_length=0), critical=True)
				.add_extension(x509.KeyUsage(
						digital_signature=True, content_commitment=False, key_encipherment=False,
						data_encipherment=False, key_agreement=False, key_cert_sign=True, crl_sign=True,
						encipher_only=False, decipher_only=False), critical=True)
				.add_extension(x509.SubjectKeyIdentifier.from_public_key(public), critical=False)
				.sign(self._key, hashes.SHA256()))
		
		self.certificate = str(self.directory / 'authority.pem')
		Path(self.certificate).write_bytes(self._certificate.public_bytes(serialization.Encoding.PEM))
		
		log.info("Generated ephemeral certification authority.", extra=dict(directory=str(self.directory)))
	
	def __repr__(self) -> str:
		return f"Authority({str(self.directory)!r})"
	
	def issue(self, common_name:str, hosts:Iterable[str]=LOOPBACK, client:bool=False) -> Issued:
		"""Issue a leaf certificate for the given host names and addresses, or for a client when `client` is set."""
		
		key = ec.generate_private_key(ec.SECP256R1())
		now = datetime.now(timezone.utc)
		names = []
		
		for host in hosts:
			try:
				names.append(x509.IPAddress(ip_address(host)))
			except ValueError:
				names.append(x509.DNSName(host))
		
		usage = [ExtendedKeyUsageOID.CLIENT_AUTH] if client else [ExtendedKeyUsageOID.SERVER_AUTH]
		
		builder = (x509.CertificateBuilder()
				.subject_name(_name(common_name))
				.issuer_name(self._certificate.subject)
				.public_key(key.public_key())
				.serial_number(x509.random_serial_number())
				.not_valid_before(now - timedelta(minutes=5))
				.not_valid_after(now + timedelta(days=self.days))
				.add_extension(x509.BasicConstraints(ca=False, path_length=None), critical=True)
				.add_extension(x509.KeyUsage(
						digital_signature=True, content_commitment=False, key_encipherment=False,
						data_encipherment=False, key_agreement=False, key_cert_sign=False, crl_sign=False,
						encipher_only=False, decipher_only=False), critical=True)
				.add_extension(x509.ExtendedKeyUsage(usage), critical=False)
				.add_extension(x509.SubjectKeyIdentifier.from_public_key(key.public_key()), critical=False)
				.add_extension(x509.AuthorityKeyIdentifier.from_issuer_public_key(self._key.public_key()),
						critical=False))
		
		if names:
			builder = builder.add_extension(x509.SubjectAlternativeName(names), critical=False)
		
		certificate = builder.sign(self._key, hashes.SHA256())
		stem = common_name.replace(' ', '-').replace('/', '-')
		
		certificate_path = self.directory / f'{stem}.pem'
		key_path = self.directory / f'{stem}.key'
		
		certificate_path.write_bytes(certificate.public_bytes(serialization.Encoding.PEM))
		_write_key(key, key_path)
		
		return Issued(str(certificate_path), str(key_path), f"/O=web.tpc/CN={common_name}")
