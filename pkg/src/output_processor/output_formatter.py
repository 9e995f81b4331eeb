"""
Output Formatter Module
Renders verification reports, notary histories and trust status for people or machines
"""

import json
import logging
import textwrap
from collections import Counter
from datetime import datetime
from typing import Any, Dict, List, Mapping, Optional

from core.timeutil import format_rfc3339, utc_now
from verification.verifier import CheckStatus, TlsBinding, VerificationReport
from web_of_trust.trust_store import KeyRecord, Validity

logger = logging.getLogger(__name__)

VALID_STYLES = ('text', 'machine')

STATUS_ICONS = {
    CheckStatus.PASS: '✓',
    CheckStatus.FAIL: '✗',
    CheckStatus.SKIP: '-',
}


class OutputFormatter:
    """
    Output formatter for command results

    'text' is for terminals; 'machine' emits exactly one JSON object per call,
    on one line, so output can be read as JSON lines.
    """

    def __init__(self, output_style: str = 'text'):
        """
        Initialize output formatter

        Args:
            output_style (str): Output style ('text', 'machine')
        """
        if output_style not in VALID_STYLES:
            raise ValueError(f"Invalid output style: {output_style}. Valid options: {list(VALID_STYLES)}")
        self.output_style = output_style
        self.session_reports: List[VerificationReport] = []

        # Display configuration
        self.max_line_width = 80

        logger.info(f"Output formatter initialized with style: {output_style}")

    @property
    def machine(self) -> bool:
        return self.output_style == 'machine'

    @staticmethod
    def _json(data: Mapping[str, Any]) -> str:
        return json.dumps(data, ensure_ascii=False)

    def format_record(self, kind: str, data: Dict[str, Any], title: Optional[str] = None) -> str:
        """
        Format a flat result (key generated, descriptor written, ...)

        Args:
            kind (str): Record kind, the "type" field in machine output
            data (dict): Fields to show
            title (str): Heading for text output
        """
        if self.machine:
            return self._json({'type': kind, **data})
        lines = [title or kind]
        width = max((len(k) for k in data), default=0)
        for key, value in data.items():
            lines.append(f"  {key.replace('_', ' '):<{width}}  {value}")
        return "\n".join(lines)

    def format_report(self, report: VerificationReport, tls_binding: Optional[TlsBinding] = None) -> str:
        """
        Format a verification report

        Args:
            report (VerificationReport): Report to render
            tls_binding (TlsBinding): Result of an optional TLS fingerprint check

        Returns:
            str: Formatted report
        """
        self.session_reports.append(report)
        if self.machine:
            data = report.to_dict()
            if tls_binding is not None:
                data['tls_binding'] = tls_binding.value
            return self._json(data)

        lines = [
            f"Verdict:   {report.verdict.value} (exit {report.exit_code})",
            f"Clearnet:  {report.clearnet_url or '?'}",
            f"Onion:     {report.onion_address or '?'}",
            f"Signer:    {report.signer_fingerprint}",
            f"Assurance: {report.assurance.value}",
        ]
        if tls_binding is not None:
            lines.append(f"TLS:       {tls_binding.value}")
        lines.append("Evidence:")
        for outcome in report.evidence:
            line = f"  {STATUS_ICONS[outcome.status]} {outcome.check:<17} {outcome.status.value}"
            if outcome.detail:
                line += f": {outcome.detail}"
            lines.append(textwrap.shorten(line, width=self.max_line_width * 2, placeholder=" ..."))
        return "\n".join(lines)

    def format_trust_status(self, records: List[KeyRecord], validities: Mapping[str, Validity]) -> str:
        """Format the trust store: one key per line (or per JSON object)"""
        if self.machine:
            return "\n".join(
                self._json({
                    'type': 'trust_key',
                    'fingerprint': r.fingerprint,
                    'owner_trust': r.owner_trust.value,
                    'validity': validities.get(r.fingerprint, Validity.UNKNOWN).value,
                    'certifiers': sorted(c.certifier_fingerprint for c in r.certifications),
                })
                for r in records
            ) if records else self._json({'type': 'trust_key', 'fingerprint': None})
        if not records:
            return "Trust store is empty."
        lines = []
        for r in records:
            validity = validities.get(r.fingerprint, Validity.UNKNOWN).value
            lines.append(f"{r.fingerprint}  {r.owner_trust.value:<8}  {validity:<15}  "
                         f"{len(r.certifications)} certification(s)")
        return "\n".join(lines)

    def format_history(self, notary: str, observations: List[Dict[str, Any]], summary: Dict[str, Any]) -> str:
        """
        Format one notary's history of an address

        Args:
            notary (str): Notary URL or log path
            observations: Observation dicts in seq order
            summary (dict): verification, key change and staleness for the history
        """
        if self.machine:
            return self._json({'type': 'notary_history', 'notary': notary,
                               'observations': observations, **summary})
        lines = [f"Notary {notary}:"]
        for key, value in summary.items():
            lines.append(f"  {key.replace('_', ' ')}: {value}")
        if not observations:
            lines.append("  (no observations)")
        for obs in observations:
            lines.append(f"  #{obs['seq']:<5} {obs['observed_at']}  {obs['verdict']:<24} "
                         f"signer {obs['signer_fingerprint'][:16]}")
        return "\n".join(lines)

    def format_quorum(self, data: Dict[str, Any]) -> str:
        """Format a quorum result dict"""
        if self.machine:
            return self._json({'type': 'quorum', **data})
        line = f"Quorum: {data['quorum']} ({data['support']} of threshold {data['threshold']})"
        if data.get('descriptor_digest'):
            line += f"\n  descriptor {data['descriptor_digest']}\n  signer     {data['signer_fingerprint']}"
        return line

    def format_error(self, error_message: str, context: Optional[str] = None) -> str:
        """
        Format error messages

        Args:
            error_message (str): Error message to format
            context (str): Optional context information

        Returns:
            str: Formatted error message
        """
        if self.machine:
            return self._json({
                'type': 'error',
                'message': error_message,
                'context': context,
                'timestamp': format_rfc3339(utc_now()),
            })

        lines = [f"ERROR: {error_message}"]
        if context:
            lines.append(f"   Context: {context}")
        return "\n".join(lines)

    def format_system_message(self, message: str, message_type: str = 'info') -> str:
        """
        Format system messages

        Args:
            message (str): System message
            message_type (str): Type of message ('info', 'warning', 'success')
        """
        if self.machine:
            return self._json({'type': 'system', 'level': message_type, 'message': message})

        prefixes = {
            'info': 'i',
            'warning': '!',
            'success': '✓',
            'error': '✗',
        }
        return f"[{prefixes.get(message_type, 'i')}] {message}"

    def get_session_summary(self, now: Optional[datetime] = None) -> str:
        """
        Summarize the reports formatted so far

        Returns:
            str: Session summary
        """
        if not self.session_reports:
            return self.format_system_message("No verifications in this session yet.", 'info')

        verdicts = Counter(r.verdict.value for r in self.session_reports)
        if self.machine:
            return self._json({
                'type': 'session_summary',
                'total_verifications': len(self.session_reports),
                'verdicts': dict(sorted(verdicts.items())),
                'generated_at': format_rfc3339(now or utc_now()),
            })

        lines = ["SESSION SUMMARY:", f"   Total verifications: {len(self.session_reports)}"]
        for verdict, count in sorted(verdicts.items()):
            lines.append(f"   {verdict}: {count}")
        return "\n".join(lines)

