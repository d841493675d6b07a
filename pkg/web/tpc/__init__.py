from .client import Orchestrator, Preference, TransferReport, TransferSpec
from .exc import Kind, TpcError
from .scope import Activity, Scope, parse_scope
from .token import TransferToken, attenuate, mint, parse_token, verify


__all__ = ['Activity', 'Kind', 'Orchestrator', 'Preference', 'Scope', 'TpcError', 'TransferReport', 'TransferSpec',
		'TransferToken', 'attenuate', 'mint', 'parse_scope', 'parse_token', 'verify']
