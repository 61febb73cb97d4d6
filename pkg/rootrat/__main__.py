from rootrat.app.main import main

main()
