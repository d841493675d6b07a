"""Bearer tokens as HMAC-chained caveat lists.

A token names the issuing service, a key identifier, and an ordered list of caveats restricting what its bearer may
do. The signature chains over them:

	sig0 = HMAC-SHA256(root_key, key_id)
	sigN = HMAC-SHA256(sig(N-1), caveatN)

Anyone holding a token can append caveats and re-chain from its signature (attenuation) without knowing the root key;
nobody can remove a caveat, as that would require recovering an earlier signature. Each attenuation step starts with
the `::group::` sentinel caveat; the scopes within one group form a union, and every group carrying scopes must
independently authorize a request.

The wire form is the unpadded URL-safe base64 encoding of the compact JSON object `{"l", "k", "c", "s"}`.
"""

import json

from base64 import urlsafe_b64decode, urlsafe_b64encode
from calendar import timegm
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from re import compile as re
from time import gmtime, strftime
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

from .exc import Kind, TpcError
from .scope import Scope, parse_scope
from .util import KeyIdentifier, Secret, equal, keyed


log = __import__('logging').getLogger(__name__)

GROUP = '::group::'
SCOPE = 'scope:'
BEFORE = 'before:'
AUDIENCE = 'audience:'

_INSTANT = re(r'[0-9]{4}-[0-9]{2}-[0-9]{2}T[0-9]{2}:[0-9]{2}:[0-9]{2}Z')
_ALPHABET = re(r'[A-Za-z0-9_-]+')
_SIGNATURE = re(r'[0-9a-f]{64}')


class SignatureError(ValueError):
	"""Token text could not be decoded into a structurally valid token."""
	pass


class Reason(Enum):
	BAD_SIGNATURE = 'BAD_SIGNATURE'
	EXPIRED = 'EXPIRED'
	WRONG_AUDIENCE = 'WRONG_AUDIENCE'
	SCOPE_DENIED = 'SCOPE_DENIED'
	MALFORMED = 'MALFORMED'
	
	def __str__(self) -> str:
		return self.value


class Verdict(NamedTuple):
	reason: Optional[Reason] = None
	detail: str = ''
	token: Optional['TransferToken'] = None
	
	def __bool__(self) -> bool:
		return self.reason is None
	
	@property
	def passed(self) -> bool:
		return self.reason is None
	
	def __str__(self) -> str:
		return 'PASS' if self.reason is None else f"FAIL({self.reason}): {self.detail}"


def format_instant(seconds:float) -> str:
	"""Render Unix seconds as the RFC 3339 UTC form used by `before:` caveats."""
	return strftime('%Y-%m-%dT%H:%M:%SZ', gmtime(int(seconds)))


def parse_instant(text:str) -> int:
	if not _INSTANT.fullmatch(text):
		raise SignatureError(f"Invalid timestamp: {text!r}")
	
	try:
		moment = datetime.strptime(text, '%Y-%m-%dT%H:%M:%SZ')
	except ValueError:
		raise SignatureError(f"Invalid timestamp: {text!r}")
	
	return timegm(moment.utctimetuple())


def check_caveat(text:str) -> str:
	"""Validate a caveat against the grammar, returning it unchanged."""
	
	if text == GROUP:
		return text
	
	try:
		if text.startswith(SCOPE):
			parse_scope(text[len(SCOPE):])
			return text
	
	except TpcError as e:
		raise SignatureError(f"Invalid scope caveat {text!r}: {e.detail}")
	
	if text.startswith(BEFORE):
		parse_instant(text[len(BEFORE):])
		return text
	
	if text.startswith(AUDIENCE):
		if not text[len(AUDIENCE):] or any(c.isspace() for c in text):
			raise SignatureError(f"Invalid audience caveat: {text!r}")
		
		return text
	
	raise SignatureError(f"Unknown caveat: {text!r}")


def chain(key:bytes, caveats:Iterable[str]) -> bytes:
	for caveat in caveats:
		key = keyed(key, caveat)
	
	return key


@dataclass(frozen=True)
class TransferToken:
	issuer_location: str
	key_id: str
	caveats: Tuple[str, ...]
	signature: bytes = field(repr=False)
	
	@property
	def groups(self) -> List[List[str]]:
		"""Caveats partitioned into issuance and attenuation groups."""
		
		groups = [[]]
		
		for caveat in self.caveats:
			if caveat == GROUP:
				groups.append([])
			else:
				groups[-1].append(caveat)
		
		return groups
	
	@property
	def scopes(self) -> List[Scope]:
		return [parse_scope(c[len(SCOPE):]) for c in self.caveats if c.startswith(SCOPE)]
	
	@property
	def expires(self) -> Optional[int]:
		"""The earliest `before:` instant, in Unix seconds."""
		
		instants = [parse_instant(c[len(BEFORE):]) for c in self.caveats if c.startswith(BEFORE)]
		return min(instants) if instants else None
	
	@property
	def audiences(self) -> List[str]:
		return [c[len(AUDIENCE):] for c in self.caveats if c.startswith(AUDIENCE)]
	
	def serialize(self) -> str:
		return serialize_token(self)
	
	def as_dict(self) -> dict:
		return {
				'issuer_location': self.issuer_location,
				'key_id': self.key_id,
				'caveats': list(self.caveats),
				'signature': self.signature.hex(),
				'groups': self.groups,
			}


def mint(root_key:Secret, issuer_location:str, scopes:Sequence[Scope], before:float,
		audience:Optional[str]=None, key_id:Optional[str]=None) -> TransferToken:
	"""Construct and sign a fresh token. Only the holder of the root key can do this."""
	
	if not scopes:
		raise TpcError(Kind.BAD_REQUEST, "A token must carry at least one scope.")
	
	for scope in scopes:
		if not scope.grantable:
			raise TpcError(Kind.BAD_REQUEST, f"Scope paths may not contain a colon: {scope.path}")
	
	key_id = key_id or str(KeyIdentifier())
	caveats = [SCOPE + str(scope) for scope in scopes]
	caveats.append(BEFORE + format_instant(before))
	
	if audience:
		caveats.append(check_caveat(AUDIENCE + audience.rstrip('/')))
	
	signature = chain(keyed(root_key, key_id), caveats)
	
	return TransferToken(issuer_location, key_id, tuple(caveats), signature)


def attenuate(token:TransferToken, *caveats:str) -> TransferToken:
	"""Append one group of caveats, re-chaining from the existing signature."""
	
	if not caveats:
		raise TpcError(Kind.BAD_REQUEST, "Attenuation requires at least one caveat.")
	
	for caveat in caveats:
		if caveat == GROUP:
			raise TpcError(Kind.BAD_REQUEST, "The group sentinel is added automatically.")
		
		try:
			check_caveat(caveat)
		except SignatureError as e:
			raise TpcError(Kind.BAD_REQUEST, str(e))
	
	extra = (GROUP, ) + tuple(caveats)
	
	return TransferToken(token.issuer_location, token.key_id, token.caveats + extra, chain(token.signature, extra))


def serialize_token(t:TransferToken) -> str:
	document = {'l': t.issuer_location, 'k': t.key_id, 'c': list(t.caveats), 's': t.signature.hex()}
	encoded = json.dumps(document, separators=(',', ':')).encode('utf-8')
	
	return urlsafe_b64encode(encoded).rstrip(b'=').decode('ascii')


def parse_token(text:str) -> TransferToken:
	"""Decode the wire form. Raises `SignatureError` on anything structurally invalid; does not verify."""
	
	if not isinstance(text, str) or not _ALPHABET.fullmatch(text) or len(text) % 4 == 1:
		raise SignatureError("Token is not unpadded URL-safe base64 text.")
	
	try:
		document = json.loads(urlsafe_b64decode(text + '=' * (-len(text) % 4)).decode('utf-8'))
	except (ValueError, UnicodeDecodeError) as e:
		raise SignatureError(f"Token does not decode: {e}")
	
	if not isinstance(document, dict) or set(document) != {'l', 'k', 'c', 's'}:
		raise SignatureError("Token document must hold exactly the l, k, c, and s fields.")
	
	location, key_id, caveats, signature = document['l'], document['k'], document['c'], document['s']
	
	if not isinstance(location, str) or not isinstance(key_id, str) or not key_id:
		raise SignatureError("Token issuer location and key identifier must be text.")
	
	if not isinstance(caveats, list) or not all(isinstance(c, str) for c in caveats):
		raise SignatureError("Token caveats must be a list of text.")
	
	if not isinstance(signature, str) or not _SIGNATURE.fullmatch(signature):
		raise SignatureError("Token signature must be 64 lowercase hexadecimal digits.")
	
	token = TransferToken(location, key_id, tuple(caveats), bytes.fromhex(signature))
	
	if serialize_token(token) != text:  # Unused trailing bits, insignificant JSON whitespace, and the like.
		raise SignatureError("Token is not in canonical form.")
	
	return token


def _structure(token:TransferToken) -> None:
	for caveat in token.caveats:
		check_caveat(caveat)
	
	first = token.groups[0]
	
	if not any(c.startswith(SCOPE) for c in first) or not any(c.startswith(BEFORE) for c in first):
		raise SignatureError("Token must carry at least one scope and one expiry caveat at issuance.")


def verify(token:Union[str, TransferToken], root_key:Secret, now:float, needed:Scope,
		audience:Optional[str]=None, issuer:Optional[str]=None) -> Verdict:
	"""Decide whether the token authorizes the needed scope, here and now.

	The issuer location is not part of the signature chain; verifiers knowing their own location pass it as `issuer`
	to reject tokens naming any other. Never raises; failures are reported through the verdict's machine-readable
	`reason`.
	"""
	
	try:
		parsed = parse_token(token) if isinstance(token, str) else token
	except SignatureError as e:
		return Verdict(Reason.MALFORMED, str(e))
	
	if not equal(chain(keyed(root_key, parsed.key_id), parsed.caveats), parsed.signature):
		return Verdict(Reason.BAD_SIGNATURE, "Signature chain does not match.", parsed)
	
	if issuer is not None and parsed.issuer_location.rstrip('/') != issuer.rstrip('/'):
		return Verdict(Reason.BAD_SIGNATURE, f"Token was issued by {parsed.issuer_location}.", parsed)
	
	try:
		_structure(parsed)
	except SignatureError as e:
		return Verdict(Reason.MALFORMED, str(e), parsed)
	
	for caveat in parsed.caveats:
		if caveat.startswith(BEFORE) and not parse_instant(caveat[len(BEFORE):]) > now:
			return Verdict(Reason.EXPIRED, f"Token expired at {caveat[len(BEFORE):]}.", parsed)
	
	for bound in parsed.audiences:
		if audience is None or bound.rstrip('/') != audience.rstrip('/'):
			return Verdict(Reason.WRONG_AUDIENCE, f"Token is bound to {bound}.", parsed)
	
	for group in parsed.groups:
		scopes = [parse_scope(c[len(SCOPE):]) for c in group if c.startswith(SCOPE)]
		
		if scopes and not any(scope.covers(needed) for scope in scopes):
			return Verdict(Reason.SCOPE_DENIED, f"Token does not grant {needed}.", parsed)
	
	return Verdict(token=parsed)
