# coding=utf-8
#
# Copyright 2024 The DMMF Engine Developers
#
# Licensed under the Apache License, Version 2.0 (the "License"): you may
# not use this file except in compliance with the License. You may obtain
# a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
# WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
# License for the specific language governing permissions and limitations
# under the License.

"""Human-readable summaries of run artifacts.

Reports read only what a run wrote to its output directory. Ledger values
are printed as the decimal strings found in the artifacts; statistics over
NAV paths and returns are computed in floating point and are for reading only.

"""

from __future__ import absolute_import, division, print_function, unicode_literals

from collections import OrderedDict
import csv
import io
import json
import os

import numpy as np

from ..ledger import Dec18, ProtocolError, ZERO
from .reader import EventReader
from .runner import ATTRIBUTION_FILE, EVENTS_FILE, NAV_FILE, SUMMARY_FILE

ARTIFACTS = (EVENTS_FILE, NAV_FILE, ATTRIBUTION_FILE, SUMMARY_FILE)


class MissingArtifacts(ProtocolError):
    def __init__(self, out_dir, missing):
        super(MissingArtifacts, self).__init__('Missing run artifacts in {}: {}'.format(out_dir, ', '.join(missing)))
        self.missing = missing


def _load(out_dir):
    missing = [name for name in ARTIFACTS if not os.path.isfile(os.path.join(out_dir, name))]
    if missing:
        raise MissingArtifacts(out_dir, missing)
    with io.open(os.path.join(out_dir, SUMMARY_FILE), 'r', encoding='utf-8') as f:
        summary = json.load(f, object_pairs_hook=OrderedDict)
    with io.open(os.path.join(out_dir, ATTRIBUTION_FILE), 'r', encoding='utf-8') as f:
        attribution = json.load(f, object_pairs_hook=OrderedDict)
    with io.open(os.path.join(out_dir, EVENTS_FILE), 'rb') as f:
        events = list(EventReader(f))
    return summary, attribution, events


def _float(text):
    return Dec18.parse(text).to_float()


def nav_statistics(navs):
    """ Path statistics of a NAV series.

    :returns: ``OrderedDict`` with start, end, min, max, mean, per-block return mean and deviation, max drawdown.
    """
    path = np.array(navs, dtype=float)
    if path.size == 0:
        return OrderedDict((name, 0.0) for name in (
            'start', 'end', 'min', 'max', 'mean', 'return_mean', 'return_std', 'max_drawdown'))
    previous = path[:-1]
    returns = np.divide(np.diff(path), previous, out=np.zeros_like(previous), where=previous > 0)
    peaks = np.maximum.accumulate(path)
    drawdowns = np.divide(peaks - path, peaks, out=np.zeros_like(path), where=peaks > 0)
    return OrderedDict([
        ('start', float(path[0])),
        ('end', float(path[-1])),
        ('min', float(path.min())),
        ('max', float(path.max())),
        ('mean', float(path.mean())),
        ('return_mean', float(returns.mean()) if returns.size else 0.0),
        ('return_std', float(returns.std()) if returns.size else 0.0),
        ('max_drawdown', float(drawdowns.max()))])


def sharpe(returns, epsilon=1e-6):
    """Per-block mean over population deviation floored at `epsilon`, in floating point."""
    values = np.array(returns, dtype=float)
    if values.size == 0:
        return 0.0
    return float(values.mean() / max(float(values.std()), epsilon))


class Report(object):
    """ The summary of one run directory.

    :ivar vaults: ``{vault: {"nav": stats, "strategies": rows, "fees": ..., "reconciliation": ...}}``
    :ivar signal_fees: ``{kind: total}`` summed from ``signal_fee`` events.
    :ivar allocations: ``[(block, vault, {strategy: alpha})]`` from ``allocation`` events.
    """
    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.summary, attribution, events = _load(out_dir)
        self.vaults = OrderedDict()
        self.allocations = []
        signal_fees = OrderedDict()
        navs = OrderedDict()
        returns = OrderedDict()

        for event in events:
            if event.action == 'nav':
                series = navs.setdefault(event.actor, [])
                nav = Dec18.parse(event.payload['nav'])
                if series and series[-1] > ZERO:
                    for owner, delta in event.payload['attribution'].items():
                        returns.setdefault(event.actor, OrderedDict()).setdefault(owner, []).append(
                            _float(delta) / series[-1].to_float())
                series.append(nav)
            elif event.action == 'signal_fee':
                kind = event.payload['kind']
                signal_fees[kind] = signal_fees.get(kind, ZERO) + Dec18.parse(event.payload['amount'])
            elif event.action == 'allocation':
                self.allocations.append((event.block, event.actor, event.payload['alpha']))
        self.signal_fees = OrderedDict((kind, signal_fees[kind]) for kind in sorted(signal_fees))

        for vault_id, report in attribution['vaults'].items():
            rows = []
            for owner, values in report['strategies'].items():
                rows.append(OrderedDict([
                    ('strategy', owner),
                    ('status', values['status'] or '-'),
                    ('alpha', values['alpha'] or '-'),
                    ('cumulative_pnl', values['cumulative']),
                    ('sharpe', sharpe(returns.get(vault_id, {}).get(owner, [])))]))
            self.vaults[vault_id] = OrderedDict([
                ('nav', nav_statistics([nav.to_float() for nav in navs.get(vault_id, [])])),
                ('terminal_nav', str(navs[vault_id][-1]) if navs.get(vault_id) else '0'),
                ('strategies', rows),
                ('fees', report['fees']),
                ('flows', report['flows']),
                ('reconciliation', report['reconciliation'])])

    def attribution_rows(self):
        """``[vault, strategy, status, alpha, cumulative_pnl, sharpe]`` rows for every vault."""
        rows = []
        for vault_id, vault in self.vaults.items():
            for row in vault['strategies']:
                rows.append([vault_id, row['strategy'], row['status'], row['alpha'], row['cumulative_pnl'],
                             '{:.6f}'.format(row['sharpe'])])
        return rows

    def write_csv(self, path):
        with io.open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(['vault', 'strategy', 'status', 'alpha', 'cumulative_pnl', 'sharpe'])
            writer.writerows(self.attribution_rows())

    def to_text(self):
        summary = self.summary
        lines = [
            'Run {} (seed {}, {} blocks, {} events)'.format(
                summary['name'], summary['seed'], summary['horizon'], summary['events']),
            '  fills {fills}, rejections {rejections}'.format(**summary['counters']),
            '  state digest {}'.format(summary['state_digest']),
            '  log digest   {}'.format(summary['log_digest'])]
        for vault_id, vault in self.vaults.items():
            stats = vault['nav']
            lines.append('')
            lines.append('Vault {}'.format(vault_id))
            lines.append('  NAV start {start:.6f} end {end:.6f} min {min:.6f} max {max:.6f} mean {mean:.6f}'.format(
                **stats))
            lines.append('  per-block return mean {return_mean:.6e} std {return_std:.6e} max drawdown '
                         '{max_drawdown:.4%}'.format(**stats))
            lines.append('  terminal NAV {}'.format(vault['terminal_nav']))
            lines.append('  {:<24} {:<10} {:>22} {:>26} {:>10}'.format('strategy', 'status', 'alpha', 'pnl', 'sharpe'))
            for row in vault['strategies']:
                lines.append('  {:<24} {:<10} {:>22} {:>26} {:>10.4f}'.format(
                    row['strategy'], row['status'], row['alpha'], row['cumulative_pnl'], row['sharpe']))
            fees, flows, check = vault['fees'], vault['flows'], vault['reconciliation']
            lines.append('  fees accrued {} harvested {} outstanding {}'.format(
                fees['accrued_total'], fees['harvested_total'], fees['outstanding']))
            lines.append('  flows deposits {} withdrawals {}'.format(flows['deposits'], flows['withdrawals']))
            lines.append('  delta NAV {} = attribution {} + deposits {} - withdrawals {} - fees {} (residual {})'.format(
                check['delta_nav'], check['attribution'], check['deposits'], check['withdrawals'], check['fees'],
                check['residual']))
        lines.append('')
        lines.append('Signal fees')
        if not self.signal_fees:
            lines.append('  none')
        for kind, total in self.signal_fees.items():
            lines.append('  {:<20} {}'.format(kind, total))
        lines.append('')
        lines.append('Allocation history')
        if not self.allocations:
            lines.append('  none')
        for block, vault_id, alphas in self.allocations:
            lines.append('  block {:>8} {:<16} {}'.format(
                block, vault_id, ', '.join('{}={}'.format(k, alphas[k]) for k in sorted(alphas))))
        return '\n'.join(lines) + '\n'


def report(out_dir):
    """ Summarises the artifacts of one run.

    :raises MissingArtifacts: An artifact is missing from `out_dir`.
    :rtype: :class:`Report`
    """
    return Report(out_dir)


def compare_runs(out_dirs):
    """ Lists the terminal NAV of every vault of several runs, typically one scenario under several seeds.

    :returns: Text table, one row per run and vault.
    :raises MissingArtifacts: An artifact is missing from one of the directories.
    """
    lines = ['{:<32} {:>20} {:<16} {:>28}'.format('run', 'seed', 'vault', 'terminal nav')]
    for out_dir in out_dirs:
        summary = _load(out_dir)[0]
        for vault_id, terminal in summary['terminal'].items():
            lines.append('{:<32} {:>20} {:<16} {:>28}'.format(
                summary['name'], summary['seed'], vault_id, terminal['nav']))
    return '\n'.join(lines) + '\n'


__all__ = ['MissingArtifacts', 'Report', 'compare_runs', 'nav_statistics', 'report', 'sharpe']
