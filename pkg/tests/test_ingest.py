import json

import pytest

from cdrdag.cdr import DOMAINS, SENTINEL, clean_records, generate_cohort
from cdrdag.errors import InputError, MalformedCsv, UnmappedValue
from cdrdag.ingest import ColumnMapping, load_csv, load_mapping, mapping_template, write_cohort_csv

HEADER = "subject,visit,rater,M,O,JPS,CA,HH,PC,CDR\n"


def write(tmp_path, text, name="in.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_three_rows(tmp_path):
    p = write(tmp_path, HEADER + "1,bl,1,0,0,0,0,0,0,0\n2,bl,1,.5,0,0,0,0,0,0.5\n3,bl,1,1,1,1,1,1,1,1\n")
    recs, report = load_csv(p)
    assert len(recs) == 3 and report.rows_read == 3
    assert recs[1].scores["M"] == 0.5 and recs[1].cdr == 0.5
    assert report.cells_remapped == 1  # ".5" is not the canonical "0.5"
    assert [r.line for r in recs] == [2, 3, 4]


def test_sentinel_preserved_then_dropped(tmp_path):
    p = write(tmp_path, HEADER + "1,bl,1,0,0,0,0,0,0,-1\n2,bl,1,0,0,0,0,0,0,NA\n3,bl,1,0,0,0,0,0,0,0\n")
    recs, _ = load_csv(p)
    assert recs[0].cdr == SENTINEL and recs[1].cdr is None
    _, report, kept = clean_records(recs)
    assert report.dropped["invalid_sentinel"] == 1 and report.dropped["missing_global"] == 1
    assert [k.subject for k in kept] == ["3"]


def test_unmapped_value_names_line_and_column(tmp_path):
    p = write(tmp_path, HEADER + "1,bl,1,0,0,0,0,0,0,0\n2,bl,1,0,0.7,0,0,0,0,0\n")
    with pytest.raises(UnmappedValue) as info:
        load_csv(p)
    assert (info.value.line, info.value.column, info.value.value) == (3, "O", "0.7")
    recs, report = load_csv(p, strict=False)
    assert len(recs) == 1 and report.unmapped_failures == 1 and report.rows_skipped == 1


def test_malformed_files(tmp_path):
    with pytest.raises(MalformedCsv):
        load_csv(write(tmp_path, ""))
    with pytest.raises(MalformedCsv) as info:
        load_csv(write(tmp_path, "subject,M,O\n1,0,0\n"))
    assert info.value.line == 1
    with pytest.raises(MalformedCsv) as info:
        load_csv(write(tmp_path, HEADER + "1,bl,1,0,0,0,0,0,0,0\n2,bl,1,0,0\n"))
    assert info.value.line == 3
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "absent.csv")


def test_custom_mapping_and_delimiter(tmp_path):
    doc = {
        "columns": {"subject": "id", "M": "mem", "O": "ori", "JPS": "jud", "CA": "com",
                    "HH": "home", "PC": "care", "CDR": "glob"},
        "values": {"missing": None, "half": 0.5},
        "delimiter": ";",
    }
    mp = tmp_path / "map.json"
    mp.write_text(json.dumps(doc))
    mapping = load_mapping(mp)
    p = write(tmp_path, "id;mem;ori;jud;com;home;care;glob\nx; half ;0;0;0;0;0;half\ny;0;0;0;0;0;missing;0\n")
    recs, report = load_csv(p, mapping)
    assert recs[0].subject == "x" and recs[0].scores["M"] == 0.5
    assert recs[1].scores["PC"] is None
    assert report.cells_remapped == 3


def test_mapping_validation():
    with pytest.raises(InputError):
        ColumnMapping({"M": "m"})
    cols = {f: f for f in (*DOMAINS, "CDR")}
    with pytest.raises(InputError):
        ColumnMapping({**cols, "age": "age"})
    with pytest.raises(InputError):
        ColumnMapping(cols, {"x": 0.7})
    replaced = ColumnMapping.from_dict({"columns": cols, "values": {"z": 0}, "replace_default_values": True})
    assert replaced.values == {"z": 0}


@pytest.mark.parametrize("name", ["adni", "lasi-dad"])
def test_templates_load(name):
    m = mapping_template(name)
    assert set(DOMAINS) <= set(m.columns)


def test_phase_filter(tmp_path):
    cols = {f: f for f in (*DOMAINS, "CDR")}
    mapping = ColumnMapping({**cols, "subject": "subject", "phase": "phase"})
    text = "subject,phase,M,O,JPS,CA,HH,PC,CDR\n1,ADNI1,0,0,0,0,0,0,0\n2,ADNI2,1,1,1,1,1,1,1\n3,ADNI1,1,1,1,1,1,1,1\n"
    p = write(tmp_path, text)
    recs, report = load_csv(p, mapping, phases={"ADNI1"})
    assert [r.subject for r in recs] == ["1", "3"] and report.rows_filtered == 1
    assert {r.phase for r in recs} == {"ADNI1"}
    assert len(load_csv(p, mapping)[0]) == 3
    with pytest.raises(InputError):
        load_csv(p, ColumnMapping(cols), phases={"ADNI1"})


def test_cohort_csv_round_trip(tmp_path):
    d = generate_cohort("lasi-like", 200, 3)
    p = tmp_path / "cohort.csv"
    write_cohort_csv(p, d)
    recs, report = load_csv(p)
    back, cleaning, _ = clean_records(recs)
    assert report.rows_read == 200 and cleaning.n_retained == 200
    assert (back.rows == d.rows).all()
