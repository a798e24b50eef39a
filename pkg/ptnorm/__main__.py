from ptnorm.cli import app

app(prog_name="ptnorm")
