import json

import pytest

from shopfloor.env import ShopEnv
from shopfloor.instances import (
    ArticleSpec,
    ComponentSpec,
    GenSpec,
    Order,
    ParseError,
    expand_orders,
    generate_instance,
    instance_to_json,
    parse_instance,
    serialize_instance,
)
from shopfloor.model import DomainError, Operation


class TestParse:
    def test_bundled_instance_matches_tables(self, paper):
        assert paper.n_jobs == 3 and paper.n_machines == 3
        assert paper.machines[0].setup_time[1][2] == 8
        assert paper.machines[1].setup_time[0][1] == 9
        assert paper.machines[2].setup_time[1][2] == 0
        assert paper.transport[0][1] == 10
        assert [b.capacity for b in paper.buffers] == [60, 43, 30]
        j3 = paper.jobs[2]
        assert j3.quantity == 400
        assert j3.deadline == 100
        assert [op.unit_time for op in j3.ops] == [0.0625, 0.04, 0.0625]
        assert [op.volume for op in j3.ops] == [20, 15, 10]

    def test_transport_diagonal_error(self, paper):
        doc = serialize_instance(paper)
        doc["transport"][1][1] = 3
        with pytest.raises(ParseError, match=r"transport\[1\]\[1\]"):
            parse_instance(doc)

    def test_unknown_machine_reference(self, paper):
        doc = serialize_instance(paper)
        doc["jobs"][0]["operations"][0]["machine"] = "M9"
        with pytest.raises(ParseError, match="unknown machine 'M9'"):
            parse_instance(doc)

    def test_missing_field_has_path(self, paper):
        doc = serialize_instance(paper)
        del doc["jobs"][1]["operations"][2]["volume"]
        with pytest.raises(ParseError, match=r"jobs\[1\].operations\[2\]"):
            parse_instance(doc)

    def test_loaded_instance_reproduces_reference_total(self, paper):
        from shopfloor.model import setup_time, total_processing_time, transport_time

        j3 = paper.jobs[2]
        op = j3.ops[0]
        t = transport_time(paper, j3.start, op.machine_id)
        s = setup_time(paper.machines[op.machine_id],
                       paper.machines[op.machine_id].initial_setup, op.setup)
        assert total_processing_time(j3.quantity, op.unit_time, t, s) == 29

    def test_round_trip_identity(self, paper):
        text = instance_to_json(paper)
        again = instance_to_json(parse_instance(text))
        assert text == again

    @pytest.mark.parametrize("seed", range(50))
    def test_round_trip_over_generated_corpus(self, seed):
        instance = generate_instance(GenSpec(seed=seed, n_jobs=1 + seed % 4,
                                             n_machines=1 + (seed // 4) % 4))
        text = instance_to_json(instance)
        assert instance_to_json(parse_instance(text)) == text


class TestGenerator:
    def test_same_seed_same_instance(self):
        a = generate_instance(GenSpec(seed=11))
        b = generate_instance(GenSpec(seed=11))
        assert serialize_instance(a) == serialize_instance(b)

    def test_different_seed_differs(self):
        a = generate_instance(GenSpec(seed=1))
        b = generate_instance(GenSpec(seed=2))
        assert serialize_instance(a) != serialize_instance(b)

    @pytest.mark.parametrize("seed", range(0, 1000, 7))
    def test_generated_instances_always_validate(self, seed):
        instance = generate_instance(GenSpec(seed=seed, n_jobs=1 + seed % 6,
                                             n_machines=1 + seed % 5))
        assert instance.problems() == []

    def test_observation_shapes_from_spec_sizes(self):
        instance = generate_instance(GenSpec(seed=3, n_jobs=3, n_machines=3))
        obs = ShopEnv(instance).observe()
        assert obs.machine_info.shape == (3, 3)
        assert obs.job_info.shape == (2, 3)
        assert obs.buffer_info.shape == (3,)

    def test_volumes_never_grow_along_route(self):
        for seed in range(30):
            instance = generate_instance(GenSpec(seed=seed, n_jobs=4, n_machines=4))
            for job in instance.jobs:
                volumes = [op.volume for op in job.ops]
                assert volumes == sorted(volumes, reverse=True)

    def test_bad_bounds_rejected(self):
        with pytest.raises(DomainError):
            generate_instance(GenSpec(unit_time=(0.5, 0.1)))


def _leg_and_top_catalog(paper):
    leg_ops = (Operation(machine_id=0, setup=1, unit_time=0.05, volume=4.0),
               Operation(machine_id=1, setup=1, unit_time=0.02, volume=2.0))
    top_ops = (Operation(machine_id=0, setup=2, unit_time=0.2, volume=12.0),)
    return {
        "table": ArticleSpec(
            article_id="table",
            components=(
                ComponentSpec(name="leg", quantity_per_article=4, ops=leg_ops),
                ComponentSpec(name="top", quantity_per_article=1, ops=top_ops),
            ),
        )
    }


class TestExpandOrders:
    def test_batch_size_multiplies_through(self, paper):
        catalog = _leg_and_top_catalog(paper)
        jobs = expand_orders(catalog, [Order("table", 10, 120.0)])
        assert [j.quantity for j in jobs] == [40, 10]

    def test_deadline_carried_to_every_component(self, paper):
        catalog = _leg_and_top_catalog(paper)
        jobs = expand_orders(catalog, [Order("table", 3, 77.0)])
        assert all(j.deadline == 77.0 for j in jobs)

    def test_two_orders_make_distinct_jobs(self, paper):
        catalog = _leg_and_top_catalog(paper)
        jobs = expand_orders(catalog, [Order("table", 2, 50.0), Order("table", 5, 99.0)])
        assert len(jobs) == 4
        assert [j.quantity for j in jobs] == [8, 2, 20, 5]
        assert len({j.job_id for j in jobs}) == 4

    def test_doubling_quantity_doubles_batch(self, paper):
        catalog = _leg_and_top_catalog(paper)
        one = expand_orders(catalog, [Order("table", 7, 50.0)])
        two = expand_orders(catalog, [Order("table", 14, 50.0)])
        assert [j.quantity * 2 for j in one] == [j.quantity for j in two]

    def test_unknown_article(self, paper):
        with pytest.raises(DomainError, match="unknown article"):
            expand_orders(_leg_and_top_catalog(paper), [Order("chair", 1, 10.0)])
