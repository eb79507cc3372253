"""Cone replacement, cost accounting, and co-simulation equivalence."""

import io
from dataclasses import replace

import pytest

from ftl.mapping import (CostModel, export_mapped_blif, map_ftl,
                         verify_equivalence, write_cost_csv)
from ftl.netlist import parse_blif
from ftl.threshold import build_catalog, f115_table
from ftl.train import train

CORPUS = "src/ftl/corpus"


def load(name):
    return parse_blif(open(f"{CORPUS}/{name}").read())


@pytest.fixture(scope="module")
def catalog():
    return build_catalog(5)


def test_hybrid_two_replacements(catalog):
    nl = load("fig2_hybrid.blif")
    design = map_ftl(nl, catalog=catalog)
    assert len(design.instances) == 2
    assert {i.q for i in design.instances} == {"fq", "gq"}
    # residual logic (the carry-out cone) survives intact
    assert "co" in design.netlist.outputs
    assert design.netlist.latches == {}


def test_hybrid_cost_accounting_exact(catalog):
    nl = load("fig2_hybrid.blif")
    cost = CostModel()
    design = map_ftl(nl, cost=cost, catalog=catalog)
    removed_gates = set(nl.gates) - set(design.netlist.gates)
    removed_area = sum(cost.gate_area(nl.gates[g]) for g in removed_gates)
    removed_area += cost.dff_area * len(design.instances)
    added_area = cost.ftl_area * len(design.instances)
    assert design.cost.area_after == pytest.approx(
        design.cost.area_before - removed_area + added_area)
    assert design.cost.cells_added == 2
    assert design.cost.slack_delta > 0  # FTL C2Q beats DFF C2Q here


def test_hybrid_equivalence_exhaustive(catalog):
    nl = load("fig2_hybrid.blif")
    design = map_ftl(nl, catalog=catalog)
    report = verify_equivalence(nl, design)
    assert report.equivalent
    assert report.first_divergence is None
    assert report.cycles_checked >= 2 ** 6  # exhaustive for 6 PIs


def test_f115_cone_replaced(catalog):
    nl = load("f115_nandinv.blif")
    design = map_ftl(nl, catalog=catalog)
    assert len(design.instances) == 1
    inst = design.instances[0]
    assert catalog[inst.catalog_index].table.bits == \
        inst.function.bits or inst.function.bits == f115_table().bits
    assert design.cost.area_after < design.cost.area_before
    assert verify_equivalence(nl, design).equivalent


def test_xor_ring_untouched(catalog):
    nl = load("xor_ring.blif")
    design = map_ftl(nl, catalog=catalog)
    assert design.instances == []
    assert verify_equivalence(nl, design).equivalent


def trainer_hook(positive):
    result = train(positive)
    return result.cell if result.converged else None


def test_instances_use_trained_cells(catalog):
    design = map_ftl(load("f115_nandinv.blif"), trainer_hook=trainer_hook,
                     catalog=catalog)
    inst = design.instances[0]
    assert inst.cell is not None
    assert len(inst.leaves) == inst.cell.n
    assert verify_equivalence(load("f115_nandinv.blif"), design).equivalent


def test_corrupted_weight_diverges(catalog):
    nl = load("f115_nandinv.blif")
    design = map_ftl(nl, trainer_hook=trainer_hook, catalog=catalog)
    inst = design.instances[0]
    # park every input device: the cell can no longer compute its function
    broken = replace(inst.cell, vt=(0.88,) * inst.cell.n)
    design.instances[0] = replace(inst, cell=broken)
    report = verify_equivalence(nl, design)
    assert not report.equivalent
    assert report.first_divergence is not None


def test_pruning_keeps_best_choice(catalog):
    # mapping must pick the depth-5 F115 cut over smaller feasible cuts
    design = map_ftl(load("f115_nandinv.blif"), catalog=catalog, k=5)
    assert len(design.instances[0].leaves) == 5


def test_export_blif_and_cost_csv(catalog):
    design = map_ftl(load("fig2_hybrid.blif"), catalog=catalog)
    text = export_mapped_blif(design)
    assert text.count(".subckt ftl5") == 2
    assert "cat=" in text and "pol=" in text
    buf = io.StringIO()
    write_cost_csv(design, buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "cells_removed,cells_added,area_before,area_after,slack_delta"
    assert len(lines) == 2
