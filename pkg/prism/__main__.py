from prism.cli.main import main

raise SystemExit(main())
