import json

import pytest

from conftest import ACCEPTANCE_LINES
from hochblocks import acceptance


@pytest.mark.parametrize("number,title", [(n, t) for n, t, _ in acceptance.CRITERIA],
                         ids=[f"c{n:02d}" for n, _, _ in acceptance.CRITERIA])
def test_criterion(number, title):
    outcome = acceptance.run(number)
    line = outcome.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert outcome.title == title
    json.dumps(outcome.to_json())
    assert outcome.passed, json.dumps(outcome.to_json()["detail"], indent=1, default=str)[:4000]
