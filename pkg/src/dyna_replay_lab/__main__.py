from dyna_replay_lab.harness.cli import main


if __name__ == "__main__":
    raise SystemExit(main())
