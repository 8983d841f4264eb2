"""
Tests for the Flask solve API.

Usage:
    pytest test_api.py -v
"""

import pytest

from app import create_app
from src import __version__
from src.parser import InstanceWriter
from src.pipeline import Trainer


@pytest.fixture
def app():
    app = create_app('config.config.TestingConfig')
    app.config['SOLVER_CHECKPOINT'] = None
    return app


@pytest.fixture
def client(app):
    return app.test_client()


@pytest.fixture
def solver_app(app, train_config):
    """App serving an untrained TSP checkpoint"""
    trainer = Trainer(train_config(total_steps=0))
    trainer.train()
    app.config['SOLVER_CHECKPOINT'] = str(trainer.checkpoint_path)
    return app


def test_health(client):
    """Test the health endpoint reports version and solver availability"""
    response = client.get('/health')

    assert response.status_code == 200
    assert response.get_json() == {'status': 'ok', 'version': __version__, 'solver': False}


@pytest.mark.validation
def test_solve_requires_json(client):
    """Test that a non-JSON body is rejected with 400"""
    response = client.post('/api/solve', data="not json", content_type='text/plain')

    assert response.status_code == 400
    assert 'error' in response.get_json()


@pytest.mark.validation
def test_solve_rejects_bad_instance(client):
    """
    Test input validation before any solver is loaded.

    This validates:
    - missing instance -> 400
    - unparsable text -> 400
    - invalid decode settings -> 400
    """
    assert client.post('/api/solve', json={}).status_code == 400
    assert client.post('/api/solve', json={'text': 'NAME: x\nTYPE: TSP\nEOF\n'}).status_code == 400

    square = {'kind': 'tsp', 'coords': [[0, 0], [1, 0], [1, 1], [0, 1]]}
    response = client.post('/api/solve', json={'instance': square, 'mode': 'hybrid', 'p': 2.0})
    assert response.status_code == 400, "P outside [0, 1] should be rejected"


def test_solve_without_checkpoint(client, square_instance):
    """Test that a valid request without a configured checkpoint gets 503"""
    response = client.post('/api/solve', json={'instance': square_instance.to_dict()})

    assert response.status_code == 503
    assert response.get_json() == {'error': 'Solver unavailable.'}


@pytest.mark.security
def test_request_size_limit(client):
    """Test that bodies above MAX_INPUT_SIZE are refused with 413"""
    response = client.post('/api/solve', data="x" * (1024 * 1024 + 1), content_type='application/json')
    assert response.status_code == 413


@pytest.mark.integration
def test_solve_square(solver_app, square_instance):
    """Test greedy solving of the unit square through the API"""
    client = solver_app.test_client()
    response = client.post('/api/solve', json={'instance': square_instance.to_dict(), 'mode': 'greedy'})

    assert response.status_code == 200
    data = response.get_json()
    assert data['success'] is True
    assert data['name'] == "square"
    assert data['nodes'] == [0, 1, 2, 3]
    assert data['length'] == pytest.approx(4.0)
    assert data['time_s'] >= 0


@pytest.mark.integration
def test_solve_tsplib_text(solver_app, square_instance):
    """Test that TSPLib text is accepted as input"""
    client = solver_app.test_client()
    text = InstanceWriter.to_tsplib(square_instance)
    response = client.post('/api/solve', json={'text': text, 'mode': 'sample', 'n_rollouts': 3})

    assert response.status_code == 200
    assert sorted(response.get_json()['nodes']) == [0, 1, 2, 3]


@pytest.mark.integration
def test_solve_kind_mismatch(solver_app, small_cvrp_instance):
    """Test that a CVRP instance sent to a TSP checkpoint is a client error"""
    client = solver_app.test_client()
    response = client.post('/api/solve', json={'instance': small_cvrp_instance.to_dict()})

    assert response.status_code == 400
    assert 'tsp' in response.get_json()['error']
