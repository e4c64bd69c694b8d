import pytest

from postdev.dataset import CityRecord, DataError, Dataset, load_csv, missouri, write_csv


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_single_row(tmp_path):
    d = load_csv(_write(tmp_path, "id,n,r\n1,1019,2\n"))
    assert (d.R, d.N, d.m) == (2, 1019, 1)


def test_zero_count(tmp_path):
    d = load_csv(_write(tmp_path, "id,n,r\n1,100,0\n"))
    assert (d.R, d.N) == (0, 100)


def test_missouri_roundtrip_totals(tmp_path, data):
    path = tmp_path / "mo.csv"
    write_csv(data, path)
    loaded = load_csv(path)
    # independent summation over the raw file text
    rows = [line.split(",") for line in path.read_text().splitlines()[1:]]
    assert loaded.R == sum(int(r[2]) for r in rows) == 1438
    assert loaded.N == sum(int(r[1]) for r in rows) == 158389
    assert loaded.records == data.records


def test_missouri_known_rows(data):
    assert data.m == 84
    assert data.records[3] == CityRecord(4, 54155, 402)
    assert data.records[83] == CityRecord(84, 22514, 334)
    assert [rec.id for rec in data.records] == list(range(1, 85))


def test_missouri_zero_counts(data):
    zero = [rec for rec in data.records if rec.r == 0]
    assert len(zero) == 4
    assert all(rec.n < 200 for rec in zero)


@pytest.mark.parametrize("city, rate", [(4, 0.00742), (44, 0.00867), (84, 0.01484)])
def test_observed_rates(data, city, rate):
    rec = data.records[data.index_of(city)]
    assert round(rec.rate, 5) == rate


def test_totals_recomputed():
    d = Dataset.from_rows([(1, 10, 3), (2, 5, 5), (7, 1, 0)])
    assert d.R == 8 and d.N == 16


@pytest.mark.parametrize("text, match", [
    ("", "empty file"),
    ("id,n,r\n", "empty file"),
    ("id,n,r\n1,10,2\n2,abc,1\n", "row 3"),
    ("id,n,r\n1,10,2\n2,5\n", "row 3"),
    ("id,n,r\n1,-4,0\n", "negative"),
    ("id,n\n1,4\n", "missing column"),
])
def test_malformed(tmp_path, text, match):
    with pytest.raises(DataError, match=match):
        load_csv(_write(tmp_path, text))


def test_r_exceeds_n_reports_id(tmp_path):
    with pytest.raises(DataError, match="area 9"):
        load_csv(_write(tmp_path, "id,n,r\n1,10,2\n9,5,6\n"))


def test_duplicate_ids():
    with pytest.raises(DataError, match="duplicate"):
        Dataset.from_rows([(1, 10, 2), (1, 11, 3)])


def test_record_invariants():
    with pytest.raises(DataError):
        CityRecord(1, 0, 0)
    with pytest.raises(DataError):
        CityRecord(1, 3, 4)


def test_immutable(data):
    with pytest.raises(Exception):
        data.r[0] = 5
    with pytest.raises(Exception):
        data.records = ()


def test_missouri_is_fresh():
    assert missouri() == missouri()
