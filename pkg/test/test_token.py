import json

from base64 import urlsafe_b64decode, urlsafe_b64encode

import pytest

from hypothesis import HealthCheck, assume, given, settings, strategies as st

from web.tpc.exc import Kind, TpcError
from web.tpc.path import normalize_path
from web.tpc.scope import Activity, Scope, parse_scope
from web.tpc.token import (GROUP, Reason, SignatureError, Verdict, attenuate, format_instant, mint, parse_instant,
		parse_token, verify)
from web.tpc.util import KeyIdentifier


KEY = 'endpoint root key'
ISSUER = 'https://a.example'
NOW = 1700000000
LATER = NOW + 3600

thorough = settings(max_examples=10000, deadline=None, suppress_health_check=[HealthCheck.too_slow])

activities = st.sampled_from(list(Activity))
paths = st.lists(st.sampled_from(['data', 'run1', 'run2', 'f']), max_size=3).map(lambda s: '/' + '/'.join(s))
scopes = st.builds(lambda a, p: parse_scope(f'{a}:{p}'), activities, paths)


def issued(*texts, **kw):
	return mint(KEY, ISSUER, [parse_scope(t) for t in texts], LATER, **kw)


def check(token, needed, now=NOW, **kw):
	return verify(token, KEY, now, parse_scope(needed), **kw)


class TestWireFormat(object):
	def test_document(self):
		token = issued('DOWNLOAD:/data', key_id='0' * 24)
		text = token.serialize()
		
		assert '=' not in text
		assert set(text) <= set('ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_')
		
		document = json.loads(urlsafe_b64decode(text + '=' * (-len(text) % 4)))
		
		assert document == {
				'l': ISSUER,
				'k': '0' * 24,
				'c': ['scope:DOWNLOAD:/data', 'before:2023-11-14T23:13:20Z'],
				's': token.signature.hex(),
			}
	
	def test_parse_reproduces(self):
		token = issued('DOWNLOAD:/data', 'LIST:/', audience='https://b.example/')
		assert parse_token(token.serialize()) == token
		assert token.audiences == ['https://b.example']
	
	def test_key_identifier(self):
		token = issued('DOWNLOAD:/')
		assert len(token.key_id) == 24
		assert str(KeyIdentifier(token.key_id)) == token.key_id
	
	@pytest.mark.parametrize('text', [
			'',
			'not base64!',
			'abcde',  # Impossible length.
			urlsafe_b64encode(b'[]').decode().rstrip('='),
			urlsafe_b64encode(b'{"l":"x","k":"y","c":[],"s":"00"}').decode().rstrip('='),
			urlsafe_b64encode(b'{"l":"x","k":"y","c":[],"s":"' + b'0' * 64 + b'","extra":1}').decode().rstrip('='),
			urlsafe_b64encode(b'{"l": "x", "k": "y", "c": [], "s": "' + b'0' * 64 + b'"}').decode().rstrip('='),
		])
	def test_malformed(self, text):
		with pytest.raises(SignatureError):
			parse_token(text)
	
	def test_padded_is_not_canonical(self):
		text = issued('DOWNLOAD:/').serialize()
		
		with pytest.raises(SignatureError):
			parse_token(text + '=' * (-len(text) % 4 or 4))
	
	def test_mint_requires_a_scope(self):
		with pytest.raises(TpcError) as exc:
			mint(KEY, ISSUER, [], LATER)
		
		assert exc.value.kind is Kind.BAD_REQUEST
	
	def test_mint_rejects_colon_paths(self):
		with pytest.raises(TpcError) as exc:
			mint(KEY, ISSUER, [Scope(Activity.DOWNLOAD, normalize_path('/data/a:b'))], LATER)
		
		assert exc.value.kind is Kind.BAD_REQUEST
	
	def test_parent_grant_covers_colon_names(self):
		needed = Scope(Activity.DOWNLOAD, normalize_path('/data/a:b'))
		assert verify(issued('DOWNLOAD:/data'), KEY, NOW, needed)
	
	def test_instants(self):
		assert format_instant(NOW) == '2023-11-14T22:13:20Z'
		assert parse_instant('2023-11-14T22:13:20Z') == NOW
		
		for bad in ('2023-11-14 22:13:20Z', '2023-13-14T22:13:20Z', '2023-11-14T22:13:20+00:00'):
			with pytest.raises(SignatureError):
				parse_instant(bad)


class TestVerification(object):
	def test_pass(self):
		verdict = check(issued('DOWNLOAD:/data').serialize(), 'DOWNLOAD:/data/run1/f')
		
		assert verdict
		assert verdict.passed
		assert str(verdict) == 'PASS'
		assert verdict.token.scopes == [parse_scope('DOWNLOAD:/data')]
	
	def test_union_within_issuance(self):
		token = issued('DOWNLOAD:/data/run1', 'DOWNLOAD:/data/run2')
		
		assert check(token, 'DOWNLOAD:/data/run1/f')
		assert check(token, 'DOWNLOAD:/data/run2/f')
		assert not check(token, 'DOWNLOAD:/data/run3/f')
	
	@pytest.mark.parametrize('needed', ['UPLOAD:/data/f', 'DOWNLOAD:/database', 'DOWNLOAD:/'])
	def test_scope_denied(self, needed):
		verdict = check(issued('DOWNLOAD:/data'), needed)
		
		assert verdict.reason is Reason.SCOPE_DENIED
		assert str(verdict).startswith('FAIL(SCOPE_DENIED): ')
	
	def test_wrong_key(self):
		assert verify(issued('DOWNLOAD:/'), 'another key', NOW, parse_scope('DOWNLOAD:/f')).reason is \
				Reason.BAD_SIGNATURE
	
	def test_signature_checked_before_expiry(self):
		verdict = verify(issued('DOWNLOAD:/'), 'another key', LATER + 1, parse_scope('DOWNLOAD:/f'))
		assert verdict.reason is Reason.BAD_SIGNATURE
	
	def test_malformed_text(self):
		assert check('!!!', 'DOWNLOAD:/f').reason is Reason.MALFORMED
	
	def test_expiry_boundary(self):
		token = issued('DOWNLOAD:/')
		
		assert check(token, 'DOWNLOAD:/f', now=LATER - 1)
		assert check(token, 'DOWNLOAD:/f', now=LATER - 0.5)
		assert check(token, 'DOWNLOAD:/f', now=LATER).reason is Reason.EXPIRED
		assert check(token, 'DOWNLOAD:/f', now=LATER + 1).reason is Reason.EXPIRED
	
	def test_audience(self):
		token = issued('DOWNLOAD:/', audience='https://b.example')
		
		assert check(token, 'DOWNLOAD:/f', audience='https://b.example/')
		assert check(token, 'DOWNLOAD:/f', audience='https://c.example').reason is Reason.WRONG_AUDIENCE
		assert check(token, 'DOWNLOAD:/f').reason is Reason.WRONG_AUDIENCE
	
	def test_unbound_token_accepted_anywhere(self):
		assert check(issued('DOWNLOAD:/'), 'DOWNLOAD:/f', audience='https://b.example')
	
	def test_issuer(self):
		token = issued('DOWNLOAD:/')
		
		assert check(token, 'DOWNLOAD:/f', issuer=ISSUER + '/')
		assert check(token, 'DOWNLOAD:/f', issuer='https://evil.example').reason is Reason.BAD_SIGNATURE
	
	def test_verdict_defaults(self):
		assert Verdict()
		assert not Verdict(Reason.EXPIRED, "gone")


class TestAttenuation(object):
	def test_narrowing(self):
		token = attenuate(issued('DOWNLOAD:/data'), 'scope:DOWNLOAD:/data/run1')
		
		assert token.caveats[2] == GROUP
		assert len(token.groups) == 2
		assert check(token, 'DOWNLOAD:/data/run1/f')
		assert check(token, 'DOWNLOAD:/data/run2/f').reason is Reason.SCOPE_DENIED
	
	def test_cannot_widen(self):
		token = attenuate(issued('DOWNLOAD:/data/run1'), 'scope:DOWNLOAD:/')
		assert check(token, 'DOWNLOAD:/data/run2/f').reason is Reason.SCOPE_DENIED
	
	def test_successive_groups_intersect(self):
		token = attenuate(attenuate(issued('DOWNLOAD:/data'), 'scope:DOWNLOAD:/data/run1'),
				'scope:DOWNLOAD:/data/run2')
		
		for needed in ('DOWNLOAD:/data/run1/f', 'DOWNLOAD:/data/run2/f', 'DOWNLOAD:/data/f'):
			assert check(token, needed).reason is Reason.SCOPE_DENIED
	
	def test_earlier_expiry(self):
		token = attenuate(issued('DOWNLOAD:/'), 'before:' + format_instant(NOW + 60))
		
		assert token.expires == NOW + 60
		assert check(token, 'DOWNLOAD:/f')
		assert check(token, 'DOWNLOAD:/f', now=NOW + 60).reason is Reason.EXPIRED
	
	def test_audience_only_group_keeps_scopes(self):
		token = attenuate(issued('DOWNLOAD:/data'), 'audience:https://b.example')
		
		assert check(token, 'DOWNLOAD:/data/f', audience='https://b.example')
		assert check(token, 'DOWNLOAD:/data/f', audience='https://c.example').reason is Reason.WRONG_AUDIENCE
	
	def test_survives_the_wire(self):
		text = attenuate(issued('DOWNLOAD:/data'), 'scope:DOWNLOAD:/data/run1').serialize()
		assert check(text, 'DOWNLOAD:/data/run1/f')
	
	@pytest.mark.parametrize('caveats', [(), (GROUP, ), ('scope:READ:/x', ), ('before:tomorrow', ), ('colour:blue', ),
			('audience:', )])
	def test_invalid(self, caveats):
		with pytest.raises(TpcError) as exc:
			attenuate(issued('DOWNLOAD:/'), *caveats)
		
		assert exc.value.kind is Kind.BAD_REQUEST
	
	def test_stripping_a_group_breaks_the_signature(self):
		original = issued('DOWNLOAD:/data')
		narrowed = attenuate(original, 'scope:DOWNLOAD:/data/run1')
		forged = type(narrowed)(narrowed.issuer_location, narrowed.key_id, original.caveats, narrowed.signature)
		
		assert check(forged, 'DOWNLOAD:/data/run2/f').reason is Reason.BAD_SIGNATURE


class TestProperties(object):
	@thorough
	@given(st.data())
	def test_any_single_character_change_fails(self, data):
		text = attenuate(issued('DOWNLOAD:/data', 'UPLOAD:/data'), 'scope:DOWNLOAD:/data/run1').serialize()
		index = data.draw(st.integers(0, len(text) - 1))
		replacement = data.draw(st.sampled_from('ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_'))
		assume(replacement != text[index])
		
		corrupted = text[:index] + replacement + text[index + 1:]
		verdict = verify(corrupted, KEY, NOW, parse_scope('DOWNLOAD:/data/run1/f'), issuer=ISSUER)
		
		assert verdict.reason in (Reason.MALFORMED, Reason.BAD_SIGNATURE)
	
	@thorough
	@given(st.lists(scopes, min_size=1, max_size=3), st.lists(scopes, min_size=1, max_size=3), scopes)
	def test_attenuation_never_widens(self, granted, narrowed, needed):
		original = mint(KEY, ISSUER, granted, LATER)
		attenuated = attenuate(original, *(f'scope:{s}' for s in narrowed))
		
		if verify(attenuated, KEY, NOW, needed):
			assert verify(original, KEY, NOW, needed)
			assert any(s.covers(needed) for s in narrowed)
	
	@thorough
	@given(st.integers(NOW - 86400, NOW + 86400), st.integers(-10, 10))
	def test_expiry_is_strict(self, before, offset):
		token = mint(KEY, ISSUER, [parse_scope('LIST:/')], before)
		verdict = verify(token, KEY, before + offset, parse_scope('LIST:/'))
		
		assert bool(verdict) is (offset < 0)
