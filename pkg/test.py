import json
import os
import tempfile

from cli import run_command
from matrix_io_service import MatrixIOService

examples = {
    'T': [[1, 0], [0, 0]],
    'S': [[0, 1], [0, 0]],
}

workdir = tempfile.mkdtemp(prefix='opgeom_')
io = MatrixIOService()
paths = {}
for name, entries in examples.items():
    paths[name] = io.save(entries, os.path.join(workdir, f"{name}.json"))
    print(name, json.dumps(io.to_json(entries)))

for functional in ('opnorm', 'w', 'c', 'dw'):
    for name in examples:
        print(f"compute {functional} {name} ->", run_command(['compute', '--functional', functional, '--input', paths[name]]))

print("check parallel T S ->", run_command(['check', 'parallel', '--left', paths['T'], '--right', paths['S']]))
print("verify thm-3-1 ->", run_command(['verify', 'thm-3-1', '--ensemble', 'normal', '--n', '4', '--count', '5', '--seed', '7']))
print("demo shift ->", run_command(['demo', 'shift', '--sizes', '2,4,8']))
